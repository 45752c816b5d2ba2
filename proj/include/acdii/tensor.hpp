#pragma once

#include <algorithm>
#include <cmath>

namespace acdii {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Symmetric 2x2 matrix [[s11, s12], [s12, s22]].
struct Sym2 {
    double s11 = 1.0;
    double s12 = 0.0;
    double s22 = 1.0;

    static Sym2 identity() { return {1.0, 0.0, 1.0}; }
    static Sym2 diag(double d1, double d2) { return {d1, 0.0, d2}; }
    /// R(theta) diag(d1, d2) R(theta)^T.
    static Sym2 rotated_diag(double d1, double d2, double theta) {
        const double c = std::cos(theta), s = std::sin(theta);
        return {d1 * c * c + d2 * s * s, (d1 - d2) * c * s, d1 * s * s + d2 * c * c};
    }

    double det() const { return s11 * s22 - s12 * s12; }
    double trace() const { return s11 + s22; }
    bool is_spd() const { return s11 > 0.0 && det() > 0.0; }

    Vec2 apply(Vec2 v) const { return {s11 * v.x + s12 * v.y, s12 * v.x + s22 * v.y}; }
    double quad(Vec2 v) const { return s11 * v.x * v.x + 2.0 * s12 * v.x * v.y + s22 * v.y * v.y; }

    /// Explicit 2x2 inverse; caller guarantees det() != 0.
    Sym2 inverse() const {
        const double d = det();
        return {s22 / d, -s12 / d, s11 / d};
    }

    double min_eig() const {
        const double h = 0.5 * (s11 - s22);
        return 0.5 * (s11 + s22) - std::sqrt(h * h + s12 * s12);
    }
    double max_eig() const {
        const double h = 0.5 * (s11 - s22);
        return 0.5 * (s11 + s22) + std::sqrt(h * h + s12 * s12);
    }

    Sym2 scaled(double a) const { return {a * s11, a * s12, a * s22}; }
};

/// |v|_S = (S v . v)^{1/2}
inline double norm_in(const Sym2& s, Vec2 v) { return std::sqrt(std::max(0.0, s.quad(v))); }

/// |v|_{S^{-1}} computed through the explicit inverse.
inline double inv_norm_in(const Sym2& s, Vec2 v) { return norm_in(s.inverse(), v); }

} // namespace acdii
