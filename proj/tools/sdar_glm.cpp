// sdar-glm: command-line driver for fitting, path selection, simulation and
// iteration benchmarks. Every run is determined by its argument vector.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <sdar/sdar.hpp>

namespace {

using sdar::Index;

constexpr const char* kSchemaHeader = "# sdar-glm v1";

enum ExitCode { kOk = 0, kUsage = 1, kSolver = 2 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    return sdar::detail::format_double(v);
}

// "a:s:b" (inclusive), "a,b,c" or a single value.
std::vector<double> parse_sweep(const std::string& text, const std::string& flag) {
    auto number = [&](const std::string& s) {
        const auto v = sdar::detail::parse_double(s);
        if (!v || !std::isfinite(*v)) throw UsageError("--" + flag + ": bad number '" + s + "'");
        return *v;
    };
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
        if (parts.size() != 3) throw UsageError("--" + flag + ": expected start:step:stop, got '" + text + "'");
        const double a = number(parts[0]);
        const double s = number(parts[1]);
        const double b = number(parts[2]);
        if (!(s > 0.0) || b < a) throw UsageError("--" + flag + ": need step > 0 and stop >= start");
        const auto count = static_cast<long>(std::floor((b - a) / s + 1e-9)) + 1;
        if (count > 100000) throw UsageError("--" + flag + ": sweep too long");
        for (long i = 0; i < count; ++i) {
            // Snap to 12 decimals so 0.1:0.2:0.7 prints 0.3, not 0.30000000000000004.
            const double v = a + static_cast<double>(i) * s;
            out.push_back(std::round(v * 1e12) / 1e12);
        }
    } else {
        std::stringstream ss(text);
        for (std::string part; std::getline(ss, part, ',');) out.push_back(number(part));
    }
    if (out.empty()) throw UsageError("--" + flag + ": empty sweep");
    return out;
}

std::vector<Index> parse_int_sweep(const std::string& text, const std::string& flag) {
    std::vector<Index> out;
    for (double v : parse_sweep(text, flag)) {
        if (v != std::floor(v) || v < 1) throw UsageError("--" + flag + ": expected positive integers");
        out.push_back(static_cast<Index>(v));
    }
    return out;
}

unsigned thread_count() {
    if (const char* env = std::getenv("SDAR_THREADS")) {
        const auto v = sdar::detail::parse_index(env);
        if (v && *v >= 1) return static_cast<unsigned>(*v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Writes to the named file, or stdout when the name is empty or "-".
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw UsageError("cannot open output '" + path + "'");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

sdar::Dataset load(const std::string& path, const sdar::GlmFamily& family, std::optional<Index> p) {
    sdar::Dataset d = sdar::read_libsvm(path, p);
    if (family.is_logistic()) d.y = sdar::map_labels_to_binary(d.y);
    return d;
}

void standardize(sdar::Dataset& d, const std::string& mode) {
    if (mode == "none") return;
    if (mode == "sqrtn") {
        d.X = sdar::standardize_columns(d.X, sdar::Standardization::LengthSqrtN);
    } else {
        d.X = sdar::standardize_columns(d.X, sdar::Standardization::MeanZeroVarOne);
    }
}

double accuracy(const sdar::Dataset& d, const sdar::FitResult& fit) {
    return sdar::metric_acrp(sdar::predict_labels(d, fit), d.y);
}

struct SolverFlags {
    double tau = 1.0;
    std::string scaling = "curvature";
    int max_iters = 50;
    bool intercept = false;

    void add(CLI::App* cmd) {
        cmd->add_option("--tau", tau, "Dual step size in (0, 1]")->capture_default_str();
        cmd->add_option("--dual-scaling", scaling, "Screening scale: curvature or unit")
            ->check(CLI::IsMember({"curvature", "unit"}))
            ->capture_default_str();
        cmd->add_option("--max-iters", max_iters, "Outer iteration cap")->check(CLI::PositiveNumber)->capture_default_str();
        cmd->add_flag("--intercept", intercept, "Fit an unpenalized intercept");
    }

    sdar::SdarConfig config(Index T) const {
        sdar::SdarConfig c;
        c.sparsity = T;
        c.step_size = tau;
        c.dual_scaling = scaling == "unit" ? sdar::DualScaling::Unit : sdar::DualScaling::MeanCurvature;
        c.max_outer_iters = max_iters;
        c.with_intercept = intercept;
        return c;
    }
};

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string family = "logistic";
    std::string data;
    Index T = 0;
    std::optional<Index> p;
    std::string standardize = "none";
    std::string output;
    SolverFlags solver;
};

int cmd_fit(const FitArgs& a) {
    const sdar::GlmFamily family = sdar::parse_family(a.family);
    sdar::Dataset d = load(a.data, family, a.p);
    standardize(d, a.standardize);
    const sdar::FitResult fit = sdar::gsdar_fit(family, d, a.solver.config(a.T));

    Output out(a.output);
    std::ostream& os = out.stream();
    os << kSchemaHeader << '\n' << "record,key,value\n";
    os << "summary,family," << family.name() << '\n';
    os << "summary,n," << d.n() << '\n';
    os << "summary,p," << d.p() << '\n';
    os << "summary,T," << a.T << '\n';
    os << "summary,nll," << fmt(fit.nll) << '\n';
    os << "summary,kkt_residual," << fmt(fit.kkt_residual) << '\n';
    os << "summary,iterations," << fit.iters << '\n';
    os << "summary,termination," << sdar::to_string(fit.termination) << '\n';
    os << "summary,intercept," << fmt(fit.intercept) << '\n';
    if (family.is_logistic()) os << "summary,train_accuracy," << fmt(accuracy(d, fit)) << '\n';
    for (Index j : fit.support) os << "coef," << (j + 1) << ',' << fmt(fit.beta[j]) << '\n';
    return kOk;
}

// ---------------------------------------------------------------- path

struct PathArgs {
    std::string family = "logistic";
    std::string data;
    std::optional<Index> p;
    std::optional<Index> Q;
    Index increment = 1;
    std::string stop = "hbic";
    double epsilon = 0.0;
    bool cold = false;
    std::string standardize = "none";
    std::string output;
    SolverFlags solver;
};

int cmd_path(const PathArgs& a) {
    const sdar::GlmFamily family = sdar::parse_family(a.family);
    sdar::Dataset d = load(a.data, family, a.p);
    standardize(d, a.standardize);

    sdar::AgsdarConfig cfg;
    cfg.increment = a.increment;
    cfg.max_support = a.Q;
    cfg.stop = a.stop == "hbic"      ? sdar::PathStop::HbicMinimum
               : a.stop == "nll"     ? sdar::PathStop::NllBelow
               : a.stop == "support" ? sdar::PathStop::SupportChangeBelow
                                     : sdar::PathStop::None;
    cfg.epsilon = a.epsilon;
    cfg.warm_start = !a.cold;
    cfg.threads = thread_count();
    cfg.inner = a.solver.config(1);
    const sdar::PathResult path = sdar::agsdar_fit(family, d, cfg);

    Output out(a.output);
    std::ostream& os = out.stream();
    os << kSchemaHeader << '\n' << "T,nll,hbic,support_size,iterations,termination,selected,error\n";
    os << "0," << fmt(path.null_nll) << ',' << fmt(path.null_hbic) << ",0,0,,"
       << (path.selected_T == 0 ? 1 : 0) << ",\n";
    bool any_ok = false;
    for (const sdar::PathPoint& pt : path.fits) {
        os << pt.T << ',';
        if (pt.fit) {
            any_ok = true;
            os << fmt(pt.fit->nll) << ',' << fmt(pt.hbic) << ',' << sdar::support_size(pt.fit->beta) << ','
               << pt.fit->iters << ',' << sdar::to_string(pt.fit->termination) << ','
               << (pt.T == path.selected_T ? 1 : 0) << ",\n";
        } else {
            os << "nan,nan,,,,0," << csv_escape(pt.error) << '\n';
        }
    }
    return any_ok ? kOk : kSolver;
}

// ---------------------------------------------------------------- simulate

struct SimArgs {
    std::string n = "200";
    std::string p = "1000";
    std::string K = "5";
    std::string rho = "0";
    std::string R = "10";
    std::string scheme = "ar1";
    std::string method = "gsdar";
    std::optional<Index> T;
    std::optional<double> train_fraction;
    std::optional<Index> Q;
    int reps = 100;
    std::uint64_t seed = 1;
    std::string output;
    SolverFlags solver;
};

sdar::ReplicationSolver make_solver(const SimArgs& a) {
    sdar::ReplicationSolver s;
    s.method = a.method == "agsdar" ? sdar::Method::Agsdar : sdar::Method::Gsdar;
    s.sdar = a.solver.config(a.T.value_or(0));
    s.agsdar.inner = a.solver.config(1);
    s.agsdar.max_support = a.Q;
    s.train_fraction = a.train_fraction;
    return s;
}

int cmd_simulate(const SimArgs& a) {
    const auto ns = parse_int_sweep(a.n, "n");
    const auto ps = parse_int_sweep(a.p, "p");
    const auto Ks = parse_int_sweep(a.K, "K");
    const auto rhos = parse_sweep(a.rho, "rho");
    const auto Rs = parse_sweep(a.R, "R");
    const sdar::ReplicationSolver solver = make_solver(a);
    const unsigned threads = thread_count();

    Output out(a.output);
    std::ostream& os = out.stream();
    os << kSchemaHeader << '\n'
       << "scheme,method,n,p,K,rho,R,reps,failures,reerr,acrp,apdr,afdr,adr,iters_avg,error\n";
    int ok_cells = 0;
    for (Index n : ns)
        for (Index p : ps)
            for (Index K : Ks)
                for (double rho : rhos)
                    for (double R : Rs) {
                        sdar::SimConfig sim;
                        sim.n = n;
                        sim.p = p;
                        sim.K = K;
                        sim.rho = rho;
                        sim.R = R;
                        sim.scheme = a.scheme == "banded" ? sdar::DesignScheme::BandedNeighbor : sdar::DesignScheme::Ar1;
                        sim.seed = a.seed;
                        os << a.scheme << ',' << a.method << ',' << n << ',' << p << ',' << K << ',' << fmt(rho) << ','
                           << fmt(R) << ',' << a.reps << ',';
                        std::string error;
                        try {
                            const sdar::MetricReport rep = sdar::run_replications(sim, solver, a.reps, threads);
                            if (rep.failures == rep.reps) {
                                error = "all replications failed: " + rep.outcomes.front().error;
                                os << rep.failures << ",nan,nan,nan,nan,nan,nan," << csv_escape(error) << '\n';
                                continue;
                            }
                            ++ok_cells;
                            os << rep.failures << ',' << fmt(rep.reerr) << ',' << fmt(rep.acrp) << ',' << fmt(rep.apdr)
                               << ',' << fmt(rep.afdr) << ',' << fmt(rep.adr) << ',' << fmt(rep.iters_avg) << ",\n";
                        } catch (const std::exception& e) {
                            os << a.reps << ",nan,nan,nan,nan,nan,nan," << csv_escape(e.what()) << '\n';
                        }
                    }
    return ok_cells > 0 ? kOk : kSolver;
}

// ---------------------------------------------------------------- bench-iters

struct BenchArgs {
    Index n = 500;
    Index p = 1000;
    double R = 3.0;
    std::string rho = "0.1";
    std::string K = "2:2:50";
    int reps = 100;
    std::uint64_t seed = 1;
    std::string output;
    SolverFlags solver;
};

int cmd_bench_iters(const BenchArgs& a) {
    const auto Ks = parse_int_sweep(a.K, "K");
    const auto rhos = parse_sweep(a.rho, "rho");
    const unsigned threads = thread_count();
    sdar::ReplicationSolver solver;
    solver.sdar = a.solver.config(0);

    Output out(a.output);
    std::ostream& os = out.stream();
    os << kSchemaHeader << '\n' << "rho,K,reps,failures,iters_avg,iters_max,error\n";
    int ok_cells = 0;
    for (double rho : rhos)
        for (Index K : Ks) {
            sdar::SimConfig sim;
            sim.n = a.n;
            sim.p = a.p;
            sim.K = K;
            sim.rho = rho;
            sim.R = a.R;
            sim.scheme = sdar::DesignScheme::Ar1;
            sim.seed = a.seed;
            os << fmt(rho) << ',' << K << ',' << a.reps << ',';
            try {
                const sdar::MetricReport rep = sdar::run_replications(sim, solver, a.reps, threads);
                int max_iters = 0;
                for (const auto& o : rep.outcomes)
                    if (o.ok) max_iters = std::max(max_iters, o.iters);
                if (rep.failures == rep.reps) {
                    os << rep.failures << ",nan,nan," << csv_escape(rep.outcomes.front().error) << '\n';
                    continue;
                }
                ++ok_cells;
                os << rep.failures << ',' << fmt(rep.iters_avg) << ',' << max_iters << ",\n";
            } catch (const std::exception& e) {
                os << a.reps << ",nan,nan," << csv_escape(e.what()) << '\n';
            }
        }
    return ok_cells > 0 ? kOk : kSolver;
}

// ---------------------------------------------------------------- real-data

struct RealArgs {
    std::string train;
    std::string test;
    std::string name;
    std::optional<Index> p;
    std::optional<Index> T;
    std::optional<Index> train_size;
    std::optional<Index> test_size;
    std::uint64_t seed = 1;
    bool keep_constant = false;
    std::string output;
    SolverFlags solver;
};

int cmd_real_data(const RealArgs& a) {
    const sdar::GlmFamily family = sdar::GlmFamily::logistic();
    sdar::Dataset train = load(a.train, family, a.p);
    std::optional<sdar::Dataset> test;
    if (!a.test.empty()) {
        test = load(a.test, family, train.p());
        if (test->p() != train.p()) throw UsageError("train and test files disagree on p");
    } else if (a.train_size) {
        const Index n2 = a.test_size.value_or(train.n() - *a.train_size);
        sdar::Split s = sdar::train_test_split_counts(train, *a.train_size, n2, a.seed);
        train = std::move(s.train);
        if (s.test.n() > 0) test = std::move(s.test);
    }

    Index dropped = 0;
    if (!a.keep_constant) {
        const auto constant = sdar::constant_columns(train.X);
        dropped = static_cast<Index>(constant.size());
        if (!constant.empty()) {
            train = sdar::drop_columns(train, constant);
            if (test) *test = sdar::drop_columns(*test, constant);
        }
    }
    const sdar::ColumnScaling scaling = sdar::fit_column_scaling(train.X);
    train.X = sdar::apply_column_scaling(train.X, scaling);
    if (test) test->X = sdar::apply_column_scaling(test->X, scaling);

    const Index n = train.n();
    const Index T = a.T.value_or(std::max<Index>(
        1, static_cast<Index>(std::floor(0.5 * static_cast<double>(n) / std::log(static_cast<double>(n))))));
    const sdar::FitResult fit = sdar::gsdar_fit(family, train, a.solver.config(T));

    Output out(a.output);
    std::ostream& os = out.stream();
    os << kSchemaHeader << '\n'
       << "dataset,n_train,n_test,p,dropped_constant,T,train_accuracy,test_accuracy,nll,iterations,termination\n";
    os << csv_escape(a.name.empty() ? a.train : a.name) << ',' << n << ',' << (test ? test->n() : 0) << ','
       << train.p() << ',' << dropped << ',' << T << ',' << fmt(accuracy(train, fit)) << ','
       << (test ? fmt(accuracy(*test, fit)) : std::string("nan")) << ',' << fmt(fit.nll) << ',' << fit.iters << ','
       << sdar::to_string(fit.termination) << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse GLM estimation by support detection and root finding"};
    app.require_subcommand(1);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a single model with fixed sparsity T");
    fit_cmd->add_option("--family", fit.family, "logistic or gaussian")->capture_default_str();
    fit_cmd->add_option("--data", fit.data, "LIBSVM input file")->required();
    fit_cmd->add_option("--T", fit.T, "Support size (>= 1)")->required()->check(CLI::PositiveNumber);
    fit_cmd->add_option("--p", fit.p, "Number of features (default: largest index)");
    fit_cmd->add_option("--standardize", fit.standardize, "none, meanvar or sqrtn")
        ->check(CLI::IsMember({"none", "meanvar", "sqrtn"}))
        ->capture_default_str();
    fit_cmd->add_option("-o,--output", fit.output, "Output CSV (default stdout)");
    fit.solver.add(fit_cmd);

    PathArgs path;
    auto* path_cmd = app.add_subcommand("path", "Sweep T and select by HBIC");
    path_cmd->add_option("--family", path.family, "logistic or gaussian")->capture_default_str();
    path_cmd->add_option("--data", path.data, "LIBSVM input file")->required();
    path_cmd->add_option("--p", path.p, "Number of features (default: largest index)");
    path_cmd->add_option("--Q", path.Q, "Largest support size (default floor(n / log n))")->check(CLI::PositiveNumber);
    path_cmd->add_option("--increment", path.increment, "Step in T")->check(CLI::PositiveNumber)->capture_default_str();
    path_cmd->add_option("--stop", path.stop, "hbic, nll, support or none")
        ->check(CLI::IsMember({"hbic", "nll", "support", "none"}))
        ->capture_default_str();
    path_cmd->add_option("--epsilon", path.epsilon, "Threshold for nll/support stopping")->capture_default_str();
    path_cmd->add_flag("--cold", path.cold, "Cold-start every T (parallel)");
    path_cmd->add_option("--standardize", path.standardize, "none, meanvar or sqrtn")
        ->check(CLI::IsMember({"none", "meanvar", "sqrtn"}))
        ->capture_default_str();
    path_cmd->add_option("-o,--output", path.output, "Output CSV (default stdout)");
    path.solver.add(path_cmd);

    SimArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo metrics on simulated logistic data");
    sim_cmd->add_option("--n", sim.n, "Sample size (sweepable)")->capture_default_str();
    sim_cmd->add_option("--p", sim.p, "Dimension (sweepable)")->capture_default_str();
    sim_cmd->add_option("--K", sim.K, "True support size (sweepable)")->capture_default_str();
    sim_cmd->add_option("--rho", sim.rho, "Correlation parameter (sweepable)")->capture_default_str();
    sim_cmd->add_option("--R", sim.R, "Signal range m2/m1 for ar1 (sweepable)")->capture_default_str();
    sim_cmd->add_option("--scheme", sim.scheme, "ar1 or banded")
        ->check(CLI::IsMember({"ar1", "banded"}))
        ->capture_default_str();
    sim_cmd->add_option("--method", sim.method, "gsdar or agsdar")
        ->check(CLI::IsMember({"gsdar", "agsdar"}))
        ->capture_default_str();
    sim_cmd->add_option("--T", sim.T, "Support size for gsdar (default K)")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--Q", sim.Q, "Largest support size for agsdar")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--train-fraction", sim.train_fraction, "Hold out the rest for accuracy")
        ->check(CLI::Range(0.0, 1.0));
    sim_cmd->add_option("--reps", sim.reps, "Replications per cell")->check(CLI::PositiveNumber)->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed, "Base seed")->capture_default_str();
    sim_cmd->add_option("-o,--output", sim.output, "Output CSV (default stdout)");
    sim.solver.add(sim_cmd);

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench-iters", "Average outer iterations versus K with T = K");
    bench_cmd->add_option("--n", bench.n, "Sample size")->check(CLI::PositiveNumber)->capture_default_str();
    bench_cmd->add_option("--p", bench.p, "Dimension")->check(CLI::PositiveNumber)->capture_default_str();
    bench_cmd->add_option("--R", bench.R, "Signal range m2/m1")->capture_default_str();
    bench_cmd->add_option("--rho", bench.rho, "AR(1) correlation (sweepable)")->capture_default_str();
    bench_cmd->add_option("--K", bench.K, "True support size (sweepable)")->capture_default_str();
    bench_cmd->add_option("--reps", bench.reps, "Replications per cell")->check(CLI::PositiveNumber)->capture_default_str();
    bench_cmd->add_option("--seed", bench.seed, "Base seed")->capture_default_str();
    bench_cmd->add_option("-o,--output", bench.output, "Output CSV (default stdout)");
    bench.solver.add(bench_cmd);

    RealArgs real;
    auto* real_cmd = app.add_subcommand("real-data", "Standardize, fit with T = floor(0.5 n / log n), report accuracy");
    real_cmd->add_option("--train", real.train, "Training LIBSVM file")->required();
    real_cmd->add_option("--test", real.test, "Separate test LIBSVM file");
    real_cmd->add_option("--name", real.name, "Dataset label for the report");
    real_cmd->add_option("--p", real.p, "Number of features (default: largest index)");
    real_cmd->add_option("--T", real.T, "Support size override")->check(CLI::PositiveNumber);
    real_cmd->add_option("--train-size", real.train_size, "Random split: training rows")->check(CLI::PositiveNumber);
    real_cmd->add_option("--test-size", real.test_size, "Random split: test rows");
    real_cmd->add_option("--seed", real.seed, "Split seed")->capture_default_str();
    real_cmd->add_flag("--keep-constant", real.keep_constant, "Do not drop constant columns");
    real_cmd->add_option("-o,--output", real.output, "Output CSV (default stdout)");
    real.solver.add(real_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*fit_cmd) return cmd_fit(fit);
        if (*path_cmd) return cmd_path(path);
        if (*sim_cmd) return cmd_simulate(sim);
        if (*bench_cmd) return cmd_bench_iters(bench);
        if (*real_cmd) return cmd_real_data(real);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const sdar::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kUsage;
    } catch (const sdar::InvalidLabel& e) {
        std::cerr << "invalid labels: " << e.what() << '\n';
        return kUsage;
    } catch (const sdar::InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kUsage;
    } catch (const sdar::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const sdar::ZeroVariance& e) {
        std::cerr << "invalid data: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kSolver;
    }
    return kUsage;
}
