#ifndef VPFLOW_TENSOR_HPP
#define VPFLOW_TENSOR_HPP

#include <Eigen/Dense>

#include <cmath>

namespace vpflow {

/// Symmetric 2x2 tensor stored by its physical components (xx, yy, xy).
/// The yx component is implied equal to xy, so every contraction weights
/// the off-diagonal term twice.
struct SymTensor2 {
    double xx = 0.0;
    double yy = 0.0;
    double xy = 0.0;

    static constexpr SymTensor2 identity() { return {1.0, 1.0, 0.0}; }

    static SymTensor2 from_vector(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
    Eigen::Vector3d as_vector() const { return {xx, yy, xy}; }

    SymTensor2& operator+=(const SymTensor2& o)
    {
        xx += o.xx;
        yy += o.yy;
        xy += o.xy;
        return *this;
    }
    SymTensor2& operator-=(const SymTensor2& o)
    {
        xx -= o.xx;
        yy -= o.yy;
        xy -= o.xy;
        return *this;
    }
    SymTensor2& operator*=(double s)
    {
        xx *= s;
        yy *= s;
        xy *= s;
        return *this;
    }

    friend SymTensor2 operator+(SymTensor2 a, const SymTensor2& b) { return a += b; }
    friend SymTensor2 operator-(SymTensor2 a, const SymTensor2& b) { return a -= b; }
    friend SymTensor2 operator*(double s, SymTensor2 a) { return a *= s; }
    friend SymTensor2 operator*(SymTensor2 a, double s) { return a *= s; }
    friend SymTensor2 operator-(const SymTensor2& a) { return {-a.xx, -a.yy, -a.xy}; }
    friend bool operator==(const SymTensor2&, const SymTensor2&) = default;
};

/// Frobenius inner product a:b.
inline double contract(const SymTensor2& a, const SymTensor2& b)
{
    return a.xx * b.xx + a.yy * b.yy + 2.0 * a.xy * b.xy;
}

inline double norm(const SymTensor2& t) { return std::sqrt(contract(t, t)); }

/// Linear map on symmetric tensors, as a 3x3 matrix acting on the raw
/// component triple (xx, yy, xy).
class SymLinMap {
public:
    SymLinMap() : m_(Eigen::Matrix3d::Zero()) {}
    explicit SymLinMap(const Eigen::Matrix3d& m) : m_(m) {}

    static SymLinMap zero() { return SymLinMap{}; }
    static SymLinMap identity() { return SymLinMap{Eigen::Matrix3d::Identity()}; }

    const Eigen::Matrix3d& matrix() const { return m_; }

    SymTensor2 operator()(const SymTensor2& t) const
    {
        return SymTensor2::from_vector(m_ * t.as_vector());
    }

    SymLinMap& operator+=(const SymLinMap& o)
    {
        m_ += o.m_;
        return *this;
    }
    SymLinMap& operator-=(const SymLinMap& o)
    {
        m_ -= o.m_;
        return *this;
    }
    SymLinMap& operator*=(double s)
    {
        m_ *= s;
        return *this;
    }

    friend SymLinMap operator+(SymLinMap a, const SymLinMap& b) { return a += b; }
    friend SymLinMap operator-(SymLinMap a, const SymLinMap& b) { return a -= b; }
    friend SymLinMap operator*(double s, SymLinMap a) { return a *= s; }
    friend SymLinMap operator*(SymLinMap a, double s) { return a *= s; }
    friend SymLinMap operator-(SymLinMap a) { return a *= -1.0; }

    /// Composition: (a * b)(t) == a(b(t)).
    friend SymLinMap operator*(const SymLinMap& a, const SymLinMap& b)
    {
        return SymLinMap{a.m_ * b.m_};
    }

private:
    Eigen::Matrix3d m_;
};

/// Rank-one map t -> a (b:t).
inline SymLinMap outer(const SymTensor2& a, const SymTensor2& b)
{
    Eigen::Matrix3d m = a.as_vector() * Eigen::RowVector3d(b.xx, b.yy, 2.0 * b.xy);
    return SymLinMap{m};
}

} // namespace vpflow

#endif // VPFLOW_TENSOR_HPP
