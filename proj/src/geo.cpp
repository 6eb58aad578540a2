#include "gimbal/geo.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gimbal::geo {

namespace {

double wrap_degrees(double deg) {
  if (deg > 180.0) return deg - 360.0;
  if (deg < -180.0) return deg + 360.0;
  return deg;
}

}  // namespace

double Displacement::norm() const { return std::hypot(east, north); }

bool is_valid(const GeoPoint& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

double deg_to_rad(double deg) { return deg * (std::numbers::pi / 180.0); }
double rad_to_deg(double rad) { return rad * (180.0 / std::numbers::pi); }

double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  const double lat1 = deg_to_rad(a.lat);
  const double lat2 = deg_to_rad(b.lat);
  const double half_dlat = 0.5 * (lat2 - lat1);
  const double half_dlon = 0.5 * deg_to_rad(wrap_degrees(b.lon - a.lon));
  const double s_lat = std::sin(half_dlat);
  const double s_lon = std::sin(half_dlon);
  double h = s_lat * s_lat + std::cos(lat1) * std::cos(lat2) * s_lon * s_lon;
  h = std::min(1.0, h);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

Displacement tangent_displacement(const GeoPoint& origin, const GeoPoint& target) {
  const double coslat = std::cos(deg_to_rad(origin.lat));
  return {kEarthRadiusM * coslat * deg_to_rad(wrap_degrees(target.lon - origin.lon)),
          kEarthRadiusM * deg_to_rad(target.lat - origin.lat)};
}

GeoPoint meters_to_geo(const GeoPoint& origin, const Displacement& delta) {
  const double coslat = std::cos(deg_to_rad(origin.lat));
  return {origin.lat + rad_to_deg(delta.north / kEarthRadiusM),
          wrap_degrees(origin.lon + rad_to_deg(delta.east / (kEarthRadiusM * coslat)))};
}

double bearing(const Displacement& delta) {
  if (delta.east == 0.0 && delta.north == 0.0) {
    throw std::invalid_argument("bearing: zero displacement has no direction");
  }
  const double angle = std::atan2(delta.north, delta.east);
  // atan2(-0.0, x<0) yields -pi; fold onto the half-open range.
  return angle == -std::numbers::pi ? std::numbers::pi : angle;
}

Eigen::Matrix2d rotation_matrix(double alpha) {
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

}  // namespace gimbal::geo
