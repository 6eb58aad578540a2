#pragma once

#include <Eigen/Core>

namespace gimbal::geo {

/// Mean Earth radius in meters. Shared by every distance and projection.
inline constexpr double kEarthRadiusM = 6371000.0;

struct GeoPoint {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// East-North displacement in meters on the local tangent plane.
struct Displacement {
  double east = 0.0;
  double north = 0.0;

  double norm() const;
  friend bool operator==(const Displacement&, const Displacement&) = default;
};

bool is_valid(const GeoPoint& p);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

/// Great-circle distance in meters.
double haversine_distance(const GeoPoint& a, const GeoPoint& b);

/// Equirectangular displacement from `origin` to `target`, scaled by
/// cos(lat) of the origin. Longitude differences are wrapped to [-180, 180].
Displacement tangent_displacement(const GeoPoint& origin, const GeoPoint& target);

/// Inverse of tangent_displacement about `origin`.
GeoPoint meters_to_geo(const GeoPoint& origin, const Displacement& delta);

/// Angle of `delta` measured counterclockwise from the East axis, in (-pi, pi].
/// Throws std::invalid_argument for a zero displacement.
double bearing(const Displacement& delta);

/// Planar rotation [[cos a, -sin a], [sin a, cos a]].
Eigen::Matrix2d rotation_matrix(double alpha);

}  // namespace gimbal::geo
