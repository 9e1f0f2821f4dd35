#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "v2xslice/rng.hpp"

namespace v2x {

struct Position {
  double x = 0.0;  // along the highway, [0, highway_length)
  double y = 0.0;  // lateral offset, first lane at 0
  bool operator==(const Position&) const = default;
};

struct Vehicle {
  int id = 0;
  Position position;
  int lane = 0;
  int direction = 1;  // -1 for lanes 0..2, +1 for lanes 3..5
  double speed = 0.0;  // m/s
  bool wants_video = false;
  bool operator==(const Vehicle&) const = default;
};

struct Rsu {
  int id = 0;
  Position position;
  bool operator==(const Rsu&) const = default;
};

struct DensityBand {
  double d_min = 1.0;
  double d_max = 100.0;
  bool operator==(const DensityBand&) const = default;
};

struct HighwayLayout {
  double highway_length = 2000.0;
  int lane_count = 6;
  double lane_width = 4.0;
  double rsu_spacing = 1732.0;
  double rsu_offset = 35.0;  // RSU row distance from the first lane
  double speed_mps = 140.0 / 3.6;
  double video_fraction = 0.5;
  DensityBand band;
};

struct Scenario {
  std::vector<Rsu> rsus;
  std::vector<Vehicle> vehicles;
  double highway_length = 0.0;
  DensityBand density_band;
  bool operator==(const Scenario&) const = default;
};

// Throws ConfigError when the band is empty or the highway cannot hold one gap.
Scenario generate_drop(const HighwayLayout& layout, RngStream& rng);

Scenario step_mobility(const Scenario& scenario, double dt);
void advance_in_place(Scenario& scenario, double dt);

// Euclidean distance on the x-torus.
double distance(const Position& a, const Position& b, double highway_length);

inline double wrap_dx(double a, double b, double highway_length) {
  double dx = a - b;
  if (dx < 0) dx = -dx;
  return dx > highway_length - dx ? highway_length - dx : dx;
}

// Versioned per-vehicle CSV: id,x,y,lane,direction,wants_video.
inline constexpr const char* kScenarioCsvVersion = "# v2xslice-scenario v1";
void write_scenario_csv(std::ostream& out, const Scenario& scenario);
Scenario read_scenario_csv(std::istream& in, const HighwayLayout& layout);

}  // namespace v2x
