#include "hhe/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "hhe/error.hpp"

namespace hhe {

UnitVector UnitVector::unchecked(std::vector<double> components) {
    assert(std::abs(norm2(components) - 1.0) <= 1e-9);
    return UnitVector(std::move(components));
}

UnitVector l2_normalize(std::span<const double> v) {
    const double n = norm2(v);
    if (n <= kNormEpsilon) {
        throw ZeroVectorError("l2_normalize: vector norm " + std::to_string(n) +
                              " below zero threshold");
    }
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
    return UnitVector(std::move(out));
}

Matrix l2_normalize_rows(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto row = x.row(i);
        const double n = norm2(row);
        if (n <= kNormEpsilon) {
            throw ZeroVectorError("l2_normalize_rows: row " + std::to_string(i) +
                                  " has near-zero norm");
        }
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = row[j] / n;
    }
    return out;
}

ScaledWeights normalize_weights(const Matrix& w, double alpha) {
    if (!(alpha > 0.0)) {
        throw InvalidConfigError("normalize_weights: alpha must be positive");
    }
    Matrix out(w.rows(), w.cols());
    for (std::size_t l = 0; l < w.rows(); ++l) {
        const auto row = w.row(l);
        const double n = norm2(row);
        if (n <= kNormEpsilon) {
            throw ZeroVectorError("normalize_weights: weight row " + std::to_string(l) +
                                  " has near-zero norm");
        }
        for (std::size_t j = 0; j < w.cols(); ++j) out(l, j) = alpha * row[j] / n;
    }
    return {std::move(out), alpha};
}

double cosine(const UnitVector& u, const UnitVector& v) {
    if (u.dim() != v.dim()) {
        throw DimensionMismatchError("cosine: dimensions " + std::to_string(u.dim()) +
                                     " vs " + std::to_string(v.dim()));
    }
    return std::clamp(dot(u.span(), v.span()), -1.0, 1.0);
}

double angular_distance_unit_rows(std::span<const double> u, std::span<const double> v) {
    // Chord length of two unit vectors lies in [0, 2]; clamp the half-chord
    // so rounding cannot push asin out of its domain.
    const double chord = std::sqrt(squared_distance(u, v));
    return 2.0 * std::asin(std::clamp(chord / 2.0, 0.0, 1.0));
}

double angular_distance(const UnitVector& u, const UnitVector& v) {
    if (u.dim() != v.dim()) {
        throw DimensionMismatchError("angular_distance: dimensions " +
                                     std::to_string(u.dim()) + " vs " +
                                     std::to_string(v.dim()));
    }
    return angular_distance_unit_rows(u.span(), v.span());
}

Matrix pairwise_angles(const Matrix& unit_rows) {
    const std::size_t b = unit_rows.rows();
    assert(b >= 2);
    Matrix out(b, b);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = i + 1; j < b; ++j) {
            const double theta = angular_distance_unit_rows(unit_rows.row(i), unit_rows.row(j));
            out(i, j) = theta;
            out(j, i) = theta;
        }
    }
    return out;
}

}  // namespace hhe
