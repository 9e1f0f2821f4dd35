#include "v2xslice/scenario.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "v2xslice/errors.hpp"

namespace v2x {

namespace {

double wrap_x(double x, double length) {
  double r = std::fmod(x, length);
  if (r < 0) r += length;
  // fmod can round up to exactly `length` for tiny negative inputs
  return r >= length ? 0.0 : r;
}

}  // namespace

Scenario generate_drop(const HighwayLayout& layout, RngStream& rng) {
  const auto& band = layout.band;
  if (!(band.d_min < band.d_max))
    throw ConfigError("density band requires d_min < d_max");
  if (band.d_min < 0) throw ConfigError("density band requires d_min >= 0");
  if (!(layout.highway_length > 0) || layout.highway_length < band.d_max)
    throw ConfigError("highway_length must exceed one inter-vehicle gap");
  if (!(layout.video_fraction > 0.0 && layout.video_fraction <= 1.0))
    throw ConfigError("video_fraction must lie in (0, 1]");
  if (layout.lane_count < 1) throw ConfigError("lane_count must be positive");

  Scenario s;
  s.highway_length = layout.highway_length;
  s.density_band = band;

  for (int k = 0; k * layout.rsu_spacing < layout.highway_length; ++k)
    s.rsus.push_back({k, {k * layout.rsu_spacing, -layout.rsu_offset}});

  const int half = layout.lane_count / 2;
  int next_id = 0;
  for (int lane = 0; lane < layout.lane_count; ++lane) {
    const double y = lane * layout.lane_width;
    const int dir = lane < half ? -1 : +1;
    double x = rng.uniform(0.0, band.d_max);
    while (x < layout.highway_length) {
      Vehicle v;
      v.id = next_id++;
      v.position = {x, y};
      v.lane = lane;
      v.direction = dir;
      v.speed = layout.speed_mps;
      v.wants_video = rng.uniform() < layout.video_fraction;
      s.vehicles.push_back(v);
      x += rng.uniform(band.d_min, band.d_max);
    }
  }
  return s;
}

void advance_in_place(Scenario& scenario, double dt) {
  if (dt == 0.0) return;
  for (auto& v : scenario.vehicles)
    v.position.x = wrap_x(v.position.x + v.direction * v.speed * dt, scenario.highway_length);
}

Scenario step_mobility(const Scenario& scenario, double dt) {
  Scenario next = scenario;
  advance_in_place(next, dt);
  return next;
}

double distance(const Position& a, const Position& b, double highway_length) {
  const double dx = wrap_dx(a.x, b.x, highway_length);
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

void write_scenario_csv(std::ostream& out, const Scenario& scenario) {
  out << kScenarioCsvVersion << '\n';
  out << "id,x,y,lane,direction,wants_video\n";
  const auto old = out.precision(17);
  for (const auto& v : scenario.vehicles) {
    out << v.id << ',' << v.position.x << ',' << v.position.y << ',' << v.lane << ','
        << v.direction << ',' << (v.wants_video ? 1 : 0) << '\n';
  }
  out.precision(old);
}

Scenario read_scenario_csv(std::istream& in, const HighwayLayout& layout) {
  std::string line;
  if (!std::getline(in, line) || line != kScenarioCsvVersion)
    throw ConfigError("scenario csv: missing or unsupported version line");
  if (!std::getline(in, line) || line != "id,x,y,lane,direction,wants_video")
    throw ConfigError("scenario csv: unexpected header");

  Scenario s;
  s.highway_length = layout.highway_length;
  s.density_band = layout.band;
  for (int k = 0; k * layout.rsu_spacing < layout.highway_length; ++k)
    s.rsus.push_back({k, {k * layout.rsu_spacing, -layout.rsu_offset}});

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Vehicle v;
    char c1, c2, c3, c4, c5;
    int video = 0;
    if (!(row >> v.id >> c1 >> v.position.x >> c2 >> v.position.y >> c3 >> v.lane >> c4 >>
          v.direction >> c5 >> video))
      throw ConfigError("scenario csv: malformed row '" + line + "'");
    v.wants_video = video != 0;
    v.speed = layout.speed_mps;
    s.vehicles.push_back(v);
  }
  return s;
}

}  // namespace v2x
