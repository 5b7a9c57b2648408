#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sagmec {

/// Earth/orbit geometry driving LEO coverage windows and slant ranges.
template <typename Scalar = double>
struct GeoParams {
  Scalar earth_radius_m = Scalar(6371e3);
  Scalar orbit_height_m = Scalar(800e3);
  Scalar min_elevation_rad = Scalar(40.0 * M_PI / 180.0);
  Scalar orbital_speed_mps = Scalar(7455.9);
  Scalar light_speed_mps = Scalar(299792458.0);

  void validate() const {
    if (!(earth_radius_m > Scalar(0)) || !(orbit_height_m > Scalar(0)) ||
        !(orbital_speed_mps > Scalar(0)) || !(light_speed_mps > Scalar(0)))
      throw std::invalid_argument("GeoParams: all lengths and speeds must be positive");
    if (!(min_elevation_rad > Scalar(0)) || !(min_elevation_rad < Scalar(M_PI / 2)))
      throw std::invalid_argument("GeoParams: min elevation must lie in (0, pi/2)");
  }
};

/// Static placement of every node tier. LEO satellites and cloud servers are
/// reduced to along-track offsets; only UAVs and users carry full coordinates.
struct NodePositions {
  std::vector<Eigen::Vector2d> user_xy_m;
  std::vector<Eigen::Vector3d> uav_xyz_m;
  std::vector<double> leo_along_track_offset_m;
  std::vector<double> cloud_offset_m;
};

/// Half-angle of the coverage arc seen from the orbit centre, for a ground
/// terminal that requires elevation of at least min_elevation_rad.
template <typename Scalar>
Scalar coverage_half_angle(const GeoParams<Scalar>& geo) {
  geo.validate();
  const Scalar ratio = geo.earth_radius_m / (geo.earth_radius_m + geo.orbit_height_m);
  return std::acos(ratio * std::cos(geo.min_elevation_rad)) - geo.min_elevation_rad;
}

/// Time one satellite spends inside the coverage cone of a fixed ground region.
template <typename Scalar>
Scalar coverage_time(const GeoParams<Scalar>& geo) {
  const Scalar arc = Scalar(2) * (geo.earth_radius_m + geo.orbit_height_m) * coverage_half_angle(geo);
  return arc / geo.orbital_speed_mps;
}

/// Service time left for a satellite that started the pass sat_offset_m behind
/// the window entry point, elapsed_s seconds into the episode. Clamped at 0.
template <typename Scalar>
Scalar remaining_service_time(Scalar sat_offset_m, const GeoParams<Scalar>& geo, Scalar elapsed_s) {
  if (elapsed_s < Scalar(0)) throw std::invalid_argument("remaining_service_time: negative elapsed time");
  const Scalar remaining = coverage_time(geo) - sat_offset_m / geo.orbital_speed_mps - elapsed_s;
  return remaining > Scalar(0) ? remaining : Scalar(0);
}

/// Ground-to-satellite slant range for a satellite at central angle
/// `central_angle_rad` away from the terminal's zenith (law of cosines).
template <typename Scalar>
Scalar slant_range(const GeoParams<Scalar>& geo, Scalar central_angle_rad) {
  const Scalar r1 = geo.earth_radius_m;
  const Scalar r2 = geo.earth_radius_m + geo.orbit_height_m;
  return std::sqrt(r1 * r1 + r2 * r2 - Scalar(2) * r1 * r2 * std::cos(central_angle_rad));
}

/// Elevation angle recovered from slant range and coverage half-angle. Used as
/// a consistency check against the configured minimum elevation.
template <typename Scalar>
Scalar elevation_from_slant(const GeoParams<Scalar>& geo, Scalar slant_range_m, Scalar central_angle_rad) {
  const Scalar r2 = geo.earth_radius_m + geo.orbit_height_m;
  return std::acos(r2 / slant_range_m * std::sin(central_angle_rad));
}

/// UAV-to-satellite distance for a satellite that has traversed
/// `along_track_m` of its pass (entry at the minimum-elevation edge).
template <typename Scalar>
Scalar uav_sat_distance(const GeoParams<Scalar>& geo, Scalar along_track_m) {
  const Scalar half = coverage_half_angle(geo);
  const Scalar traversed = along_track_m / (geo.earth_radius_m + geo.orbit_height_m);
  return slant_range(geo, half - traversed);
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar distance(const Eigen::MatrixBase<DerivedA>& a,
                                   const Eigen::MatrixBase<DerivedB>& b) {
  return (a - b).norm();
}

}  // namespace sagmec
