// Coordinate frames of the turbine chain: wind park, turbine, turbine disc
// and rotor coordinates, with the elevation/azimuth rotations between them.
#pragma once

#include <cmath>
#include <stdexcept>

#include <wecs/common.hpp>

namespace wecs::geometry {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
}
inline Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
inline double dot(const Vec3& a, const Vec3& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

/// Row-major 3x3 matrix; just enough linear algebra for frames and the
/// three-phase line patterns.
struct Mat3 {
    double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};

    static Mat3 identity() {
        Mat3 r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
        return r;
    }

    Vec3 operator*(const Vec3& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += m[i][k] * o.m[k][j];
                r.m[i][j] = s;
            }
        }
        return r;
    }

    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        return r;
    }

    double determinant() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }

    /// Inverse via the adjugate; throws on a singular matrix.
    Mat3 inverse() const {
        const double det = determinant();
        if (std::abs(det) < 1e-300) {
            throw std::domain_error("Mat3::inverse: singular matrix");
        }
        Mat3 r;
        r.m[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
        r.m[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
        r.m[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
        r.m[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
        r.m[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
        r.m[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
        r.m[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
        r.m[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
        r.m[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
        return r;
    }
};

/// Normalize an angle into (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, TWO_PI);
    if (a <= -PI) {
        a += TWO_PI;
    } else if (a > PI) {
        a -= TWO_PI;
    }
    return a;
}

/// Elevation (cone) and azimuth angles of the rotor frame, normalized into
/// (-pi, pi] on construction.
struct FrameAngles {
    double elevation_rad = 0.0;  // A_K
    double azimuth_rad = 0.0;    // A_Z

    FrameAngles() = default;
    FrameAngles(double elevation, double azimuth) {
        if (!std::isfinite(elevation) || !std::isfinite(azimuth)) {
            throw std::domain_error("FrameAngles: angle not finite");
        }
        elevation_rad = wrap_angle(elevation);
        azimuth_rad = wrap_angle(azimuth);
    }
};

/// Rotation about the x axis by the elevation/cone angle A_K.
inline Mat3 elevation_matrix(double cone_rad) {
    if (!std::isfinite(cone_rad)) {
        throw std::domain_error("elevation_matrix: angle not finite");
    }
    const double c = std::cos(cone_rad);
    const double s = std::sin(cone_rad);
    Mat3 r;
    r.m[0][0] = 1.0;
    r.m[1][1] = c;
    r.m[1][2] = -s;
    r.m[2][1] = s;
    r.m[2][2] = c;
    return r;
}

/// Rotation about the z axis by the azimuth angle A_Z.
inline Mat3 azimuth_matrix(double azimuth_rad) {
    if (!std::isfinite(azimuth_rad)) {
        throw std::domain_error("azimuth_matrix: angle not finite");
    }
    const double c = std::cos(azimuth_rad);
    const double s = std::sin(azimuth_rad);
    Mat3 r;
    r.m[0][0] = c;
    r.m[0][1] = -s;
    r.m[1][0] = s;
    r.m[1][1] = c;
    r.m[2][2] = 1.0;
    return r;
}

/// A (velocity, position) pair carried through the frame chain.
struct FrameState {
    Vec3 velocity;
    Vec3 position;
};

/// Wind-park frame to turbine frame: the velocity is unchanged, the position
/// is translated by the turbine's horizontal offset.
inline FrameState wind_to_turbine(const Vec3& velocity, const Vec3& position,
                                  double turbine_x, double turbine_y) {
    return {velocity, position - Vec3{turbine_x, turbine_y, 0.0}};
}

/// Turbine frame to turbine-disc frame: drop the nacelle height from z; the
/// velocity passes through unchanged.
inline Vec3 turbine_to_disc(const Vec3& position_turbine, double nacelle_height) {
    if (!(nacelle_height > 0.0)) {
        throw std::domain_error("turbine_to_disc: nacelle height must be > 0");
    }
    return position_turbine - Vec3{0.0, 0.0, nacelle_height};
}

/// Turbine-disc frame to rotor frame: both vectors rotate by T_EL * T_AZ.
inline FrameState disc_to_rotor(const Vec3& velocity, const Vec3& position,
                                const FrameAngles& angles) {
    const Mat3 rot = elevation_matrix(angles.elevation_rad) *
                     azimuth_matrix(angles.azimuth_rad);
    return {rot * velocity, rot * position};
}

}  // namespace wecs::geometry
