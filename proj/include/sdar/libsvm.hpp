#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sdar/error.hpp"
#include "sdar/glm.hpp"
#include "sdar/rng.hpp"

namespace sdar {

struct RawRecord {
    double label = 0.0;
    std::vector<std::pair<Index, double>> features;  // 1-based, strictly increasing
};

namespace detail {

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<Index> parse_index(std::string_view s) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return static_cast<Index>(v);
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace detail

/// Parses one LIBSVM line; returns nullopt for blank or comment-only lines.
inline std::optional<RawRecord> parse_libsvm_line(std::string_view line, long line_no) {
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        const std::size_t start = pos;
        while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos > start) tokens.push_back(line.substr(start, pos - start));
    }
    if (tokens.empty()) return std::nullopt;

    RawRecord rec;
    const auto label = detail::parse_double(tokens[0]);
    if (!label || !std::isfinite(*label))
        throw ParseError("malformed label '" + std::string(tokens[0]) + "'", line_no);
    rec.label = *label;

    Index last = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
        const std::string_view tok = tokens[t];
        const auto colon = tok.find(':');
        if (colon == std::string_view::npos)
            throw ParseError("expected idx:val, got '" + std::string(tok) + "'", line_no);
        const auto idx = detail::parse_index(tok.substr(0, colon));
        const auto val = detail::parse_double(tok.substr(colon + 1));
        if (!idx || *idx < 1) throw ParseError("bad feature index in '" + std::string(tok) + "'", line_no);
        if (!val || !std::isfinite(*val)) throw ParseError("bad feature value in '" + std::string(tok) + "'", line_no);
        if (*idx <= last)
            throw ParseError("feature indices must be strictly increasing (" + std::to_string(*idx) + " after " +
                                 std::to_string(last) + ")",
                             line_no);
        last = *idx;
        rec.features.emplace_back(*idx, *val);
    }
    return rec;
}

/**
 * Reads LIBSVM text into a dense dataset. p is the largest index seen unless
 * given; a given p smaller than an observed index is a parse error. Labels are
 * kept as written.
 */
inline Dataset read_libsvm(std::istream& in, std::optional<Index> p = std::nullopt) {
    std::vector<RawRecord> records;
    std::vector<long> line_numbers;
    std::string line;
    long line_no = 0;
    Index max_index = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto rec = parse_libsvm_line(line, line_no);
        if (!rec) continue;
        if (!rec->features.empty()) max_index = std::max(max_index, rec->features.back().first);
        records.push_back(std::move(*rec));
        line_numbers.push_back(line_no);
    }
    if (records.empty()) throw ParseError("no records", line_no);

    const Index cols = p.value_or(max_index);
    if (cols < 1) throw ParseError("no features", line_no);

    Dataset data;
    data.X = MatrixXd::Zero(static_cast<Index>(records.size()), cols);
    data.y.resize(static_cast<Index>(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto r = static_cast<Index>(i);
        data.y[r] = records[i].label;
        for (const auto& [idx, val] : records[i].features) {
            if (idx > cols)
                throw ParseError("feature index " + std::to_string(idx) + " exceeds p = " + std::to_string(cols),
                                 line_numbers[i]);
            data.X(r, idx - 1) = val;
        }
    }
    data.feature_names.reserve(static_cast<std::size_t>(cols));
    for (Index j = 1; j <= cols; ++j) data.feature_names.push_back("f" + std::to_string(j));
    return data;
}

inline Dataset read_libsvm(const std::string& path, std::optional<Index> p = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_libsvm(in, p);
}

/// Zero entries are omitted; values use shortest round-trip formatting.
inline void write_libsvm(std::ostream& out, const Dataset& data) {
    for (Index i = 0; i < data.n(); ++i) {
        out << detail::format_double(data.y[i]);
        for (Index j = 0; j < data.p(); ++j) {
            const double v = data.X(i, j);
            if (v != 0.0) out << ' ' << (j + 1) << ':' << detail::format_double(v);
        }
        out << '\n';
    }
}

/// -1 -> 0 and +1 -> 1; {0, 1} passes through. Anything else is an InvalidLabel.
inline VectorXd map_labels_to_binary(const Eigen::Ref<const VectorXd>& y) {
    bool has_minus = false;
    bool has_zero = false;
    std::vector<Index> bad;
    for (Index i = 0; i < y.size(); ++i) {
        if (y[i] == -1.0) {
            has_minus = true;
        } else if (y[i] == 0.0) {
            has_zero = true;
        } else if (y[i] != 1.0) {
            bad.push_back(i);
        }
    }
    if (has_minus && has_zero) {
        for (Index i = 0; i < y.size(); ++i) {
            if (y[i] == 0.0) bad.push_back(i);
        }
        std::sort(bad.begin(), bad.end());
    }
    if (!bad.empty()) {
        std::ostringstream msg;
        msg << "labels outside {-1, +1} / {0, 1} at rows";
        for (std::size_t k = 0; k < bad.size() && k < 10; ++k)
            msg << ' ' << bad[k] << '(' << detail::format_double(y[bad[k]]) << ')';
        if (bad.size() > 10) msg << " ... (" << bad.size() << " total)";
        throw InvalidLabel(msg.str());
    }
    VectorXd out = y;
    for (Index i = 0; i < out.size(); ++i) {
        if (out[i] == -1.0) out[i] = 0.0;
    }
    return out;
}

enum class Standardization { MeanZeroVarOne, LengthSqrtN };

/**
 * MeanZeroVarOne centers each column and divides by the sample standard
 * deviation (denominator n - 1); a constant column raises ZeroVariance.
 * LengthSqrtN rescales each nonzero column to Euclidean length sqrt(n).
 */
inline MatrixXd standardize_columns(const MatrixXd& X, Standardization mode) {
    MatrixXd out = X;
    const Index n = X.rows();
    for (Index j = 0; j < X.cols(); ++j) {
        auto col = out.col(j);
        if (mode == Standardization::MeanZeroVarOne) {
            if (n < 2) throw InvalidArgument("mean/variance standardization needs n >= 2");
            const double mean = col.mean();
            col.array() -= mean;
            const double var = col.squaredNorm() / static_cast<double>(n - 1);
            if (!(var > 0.0)) throw ZeroVariance("column " + std::to_string(j) + " has zero variance", j);
            col /= std::sqrt(var);
        } else {
            const double norm = col.norm();
            if (norm > 0.0) col *= std::sqrt(static_cast<double>(n)) / norm;
        }
    }
    return out;
}

/// Per-column center and scale, so a test set can reuse training statistics.
struct ColumnScaling {
    VectorXd center;
    VectorXd scale;
};

inline ColumnScaling fit_column_scaling(const MatrixXd& X) {
    const MatrixXd Z = standardize_columns(X, Standardization::MeanZeroVarOne);  // validates
    ColumnScaling s;
    s.center = X.colwise().mean().transpose();
    s.scale.resize(X.cols());
    for (Index j = 0; j < X.cols(); ++j)
        s.scale[j] = std::sqrt((X.col(j).array() - s.center[j]).square().sum() / static_cast<double>(X.rows() - 1));
    (void)Z;
    return s;
}

inline MatrixXd apply_column_scaling(const MatrixXd& X, const ColumnScaling& s) {
    if (X.cols() != s.center.size()) throw InvalidArgument("column count does not match the scaling");
    MatrixXd out = X;
    for (Index j = 0; j < X.cols(); ++j) out.col(j) = (out.col(j).array() - s.center[j]) / s.scale[j];
    return out;
}

/// Indices of columns with zero sample variance.
inline std::vector<Index> constant_columns(const MatrixXd& X) {
    std::vector<Index> out;
    for (Index j = 0; j < X.cols(); ++j) {
        if ((X.col(j).array() == X(0, j)).all()) out.push_back(j);
    }
    return out;
}

inline Dataset drop_columns(const Dataset& data, const std::vector<Index>& drop) {
    std::vector<Index> keep;
    std::size_t d = 0;
    for (Index j = 0; j < data.p(); ++j) {
        if (d < drop.size() && drop[d] == j) {
            ++d;
            continue;
        }
        keep.push_back(j);
    }
    Dataset out;
    out.X.resize(data.n(), static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.X.col(static_cast<Index>(k)) = data.X.col(keep[k]);
        if (static_cast<std::size_t>(keep[k]) < data.feature_names.size())
            out.feature_names.push_back(data.feature_names[static_cast<std::size_t>(keep[k])]);
    }
    out.y = data.y;
    return out;
}

inline Dataset select_rows(const Dataset& data, const std::vector<Index>& rows) {
    Dataset out;
    out.X.resize(static_cast<Index>(rows.size()), data.p());
    out.y.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.row(static_cast<Index>(i)) = data.X.row(rows[i]);
        out.y[static_cast<Index>(i)] = data.y[rows[i]];
    }
    out.feature_names = data.feature_names;
    return out;
}

struct Split {
    Dataset train;
    Dataset test;
    std::vector<Index> train_rows;  // ascending
    std::vector<Index> test_rows;   // ascending
};

/// Uniform random partition with exactly n_train rows in the training part.
inline Split train_test_split_counts(const Dataset& data, Index n_train, Index n_test, std::uint64_t seed) {
    const Index n = data.n();
    if (n_train < 1) throw InvalidArgument("training set would be empty");
    if (n_test < 0 || n_train + n_test > n)
        throw InvalidArgument("split sizes " + std::to_string(n_train) + " + " + std::to_string(n_test) +
                              " exceed n = " + std::to_string(n));
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    CounterRng rng(seed);
    // Fisher-Yates with a fixed integer reduction so the permutation does not
    // depend on the standard library's distribution implementation.
    for (Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    Split s;
    s.train_rows.assign(perm.begin(), perm.begin() + n_train);
    s.test_rows.assign(perm.begin() + n_train, perm.begin() + n_train + n_test);
    std::sort(s.train_rows.begin(), s.train_rows.end());
    std::sort(s.test_rows.begin(), s.test_rows.end());
    s.train = select_rows(data, s.train_rows);
    s.test = select_rows(data, s.test_rows);
    return s;
}

/// round(train_fraction * n) rows train, the rest test.
inline Split train_test_split(const Dataset& data, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction <= 1.0))
        throw InvalidArgument("train fraction must lie in (0, 1]");
    const Index n = data.n();
    const auto n_train = static_cast<Index>(std::llround(train_fraction * static_cast<double>(n)));
    return train_test_split_counts(data, n_train, n - n_train, seed);
}

} // namespace sdar
