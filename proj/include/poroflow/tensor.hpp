/**
 * @file tensor.hpp
 * @brief Small fixed-size 2D vector and second-order tensor types.
 */
#pragma once

#include <cmath>

namespace poroflow {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr double operator[](int i) const { return i == 0 ? x : y; }
    constexpr double& operator[](int i) { return i == 0 ? x : y; }

    constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
};

constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }

/// Row-major 2x2 tensor; (i,j) = xx, xy, yx, yy.
struct Tensor2 {
    double xx = 0.0, xy = 0.0, yx = 0.0, yy = 0.0;

    static constexpr Tensor2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Tensor2 diag(double a, double b) { return {a, 0.0, 0.0, b}; }

    constexpr double operator()(int i, int j) const {
        return i == 0 ? (j == 0 ? xx : xy) : (j == 0 ? yx : yy);
    }
    constexpr double& operator()(int i, int j) {
        return i == 0 ? (j == 0 ? xx : xy) : (j == 0 ? yx : yy);
    }

    constexpr double trace() const { return xx + yy; }
    constexpr double det() const { return xx * yy - xy * yx; }
    constexpr Tensor2 transpose() const { return {xx, yx, xy, yy}; }

    constexpr Tensor2& operator+=(const Tensor2& o) {
        xx += o.xx; xy += o.xy; yx += o.yx; yy += o.yy;
        return *this;
    }
    constexpr Tensor2& operator-=(const Tensor2& o) {
        xx -= o.xx; xy -= o.xy; yx -= o.yx; yy -= o.yy;
        return *this;
    }
    constexpr Tensor2& operator*=(double s) {
        xx *= s; xy *= s; yx *= s; yy *= s;
        return *this;
    }
};

constexpr Tensor2 operator+(Tensor2 a, const Tensor2& b) { return a += b; }
constexpr Tensor2 operator-(Tensor2 a, const Tensor2& b) { return a -= b; }
constexpr Tensor2 operator*(double s, Tensor2 a) { return a *= s; }
constexpr Tensor2 operator*(Tensor2 a, double s) { return a *= s; }

constexpr Tensor2 operator*(const Tensor2& a, const Tensor2& b) {
    return {a.xx * b.xx + a.xy * b.yx, a.xx * b.xy + a.xy * b.yy,
            a.yx * b.xx + a.yy * b.yx, a.yx * b.xy + a.yy * b.yy};
}

constexpr Vec2 operator*(const Tensor2& a, const Vec2& v) {
    return {a.xx * v.x + a.xy * v.y, a.yx * v.x + a.yy * v.y};
}

/// Frobenius norm.
inline double frobenius(const Tensor2& a) {
    return std::sqrt(a.xx * a.xx + a.xy * a.xy + a.yx * a.yx + a.yy * a.yy);
}

}  // namespace poroflow
