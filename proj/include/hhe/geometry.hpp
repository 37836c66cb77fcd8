#pragma once

#include <numbers>
#include <span>
#include <vector>

#include "hhe/matrix.hpp"

namespace hhe {

inline constexpr double kPi = std::numbers::pi;

// Vectors with 2-norm below this are treated as zero.
inline constexpr double kNormEpsilon = 1e-12;

// An L2-normalized feature vector. Instances can only be produced through
// l2_normalize (or the unchecked factory), so holding one certifies the
// unit-norm invariant.
class UnitVector {
  public:
    std::size_t dim() const { return components_.size(); }
    const std::vector<double>& components() const { return components_; }
    std::span<const double> span() const { return components_; }
    double operator[](std::size_t i) const { return components_[i]; }

    // Caller asserts the invariant already holds (e.g. rows of a matrix
    // that went through l2_normalize_rows).
    static UnitVector unchecked(std::vector<double> components);

  private:
    explicit UnitVector(std::vector<double> components)
        : components_(std::move(components)) {}
    std::vector<double> components_;

    friend UnitVector l2_normalize(std::span<const double> v);
};

// v / ||v||. Throws ZeroVectorError when ||v|| <= kNormEpsilon.
UnitVector l2_normalize(std::span<const double> v);

// Row-wise normalization of a feature batch; every row must be nonzero.
Matrix l2_normalize_rows(const Matrix& x);

// Class-center rows scaled onto the radius-alpha sphere.
struct ScaledWeights {
    Matrix rows;   // row l = alpha * w_l / ||w_l||
    double alpha;  // > 0
};

// Throws ZeroVectorError naming the offending row, InvalidConfigError for
// alpha <= 0.
ScaledWeights normalize_weights(const Matrix& w, double alpha);

// Dot product clamped to [-1, 1]. Throws DimensionMismatchError.
double cosine(const UnitVector& u, const UnitVector& v);

// Angle in [0, pi] via the chord identity theta = 2 asin(||u - v|| / 2).
double angular_distance(const UnitVector& u, const UnitVector& v);

// Chord-based angle between two rows that are already unit vectors.
double angular_distance_unit_rows(std::span<const double> u, std::span<const double> v);

// B x B matrix of pairwise angles between unit rows. Zero diagonal,
// exactly symmetric. Requires B >= 2.
Matrix pairwise_angles(const Matrix& unit_rows);

}  // namespace hhe
