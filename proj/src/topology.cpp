#include "v2x/topology.hpp"

#include <limits>
#include <stdexcept>

#include "v2x/errors.hpp"

namespace v2x {

namespace {

Vec2 right_of(Vec2 heading) { return {heading.y, -heading.x}; }
Vec2 left_of(Vec2 heading) { return {-heading.y, heading.x}; }

double wrap(double v, double period) {
  double r = std::fmod(v, period);
  if (r < 0) r += period;
  // fmod of a tiny negative value can round up to exactly `period`.
  return r >= period ? 0.0 : r;
}

bool moves_vertically(Vec2 heading) { return heading.y != 0.0; }

// Signed lateral offset of a lane from its road centerline (right-hand traffic).
double lane_offset(const ManhattanGrid& g, int lane) { return (lane + 0.5) * g.lane_width; }

// Places a vehicle on the lane `lane` of the road with centerline `road`,
// travelling along `heading`, at longitudinal coordinate `along`.
Vec2 place_on_road(const ManhattanGrid& g, Vec2 heading, double road, double along, int lane) {
  const Vec2 side = right_of(heading);
  const double off = lane_offset(g, lane);
  if (moves_vertically(heading)) return {wrap(road + side.x * off, g.width), wrap(along, g.height)};
  return {wrap(along, g.width), wrap(road + side.y * off, g.height)};
}

// Distance along the heading to the next crossing road centerline, strictly
// ahead of the current longitudinal coordinate.
double distance_to_next_crossing(const ManhattanGrid& g, const Vehicle& v, double* crossing) {
  const bool vertical = moves_vertically(v.heading);
  const double along = vertical ? v.position.y : v.position.x;
  const double period = vertical ? g.height : g.width;
  const double dir = vertical ? v.heading.y : v.heading.x;
  const auto& crossings = vertical ? g.horizontal_roads_y : g.vertical_roads_x;
  double best = std::numeric_limits<double>::infinity();
  for (double c : crossings) {
    double d = wrap(dir > 0 ? c - along : along - c, period);
    if (d <= 0.0) d = period;
    if (d < best) {
      best = d;
      *crossing = c;
    }
  }
  return best;
}

// Centerline of the road a vehicle is currently on.
double current_road(const ManhattanGrid& g, const Vehicle& v) {
  const bool vertical = moves_vertically(v.heading);
  const Vec2 side = right_of(v.heading);
  const double off = lane_offset(g, v.lane);
  if (vertical) return wrap(v.position.x - side.x * off, g.width);
  return wrap(v.position.y - side.y * off, g.height);
}

void advance(const ManhattanGrid& g, Vehicle& v, double distance, Rng& rng) {
  double remaining = distance;
  while (remaining > 0.0) {
    double crossing = 0.0;
    const double to_next = distance_to_next_crossing(g, v, &crossing);
    const bool vertical = moves_vertically(v.heading);
    if (remaining < to_next) {
      v.position = vertical
          ? Vec2{v.position.x, wrap(v.position.y + v.heading.y * remaining, g.height)}
          : Vec2{wrap(v.position.x + v.heading.x * remaining, g.width), v.position.y};
      return;
    }
    remaining -= to_next;
    const double road = current_road(g, v);
    const double u = uniform01(rng);
    if (u < 0.5) {
      v.position = place_on_road(g, v.heading, road, crossing, v.lane);
    } else {
      v.heading = u < 0.75 ? left_of(v.heading) : right_of(v.heading);
      // Enter the crossing road with the longitudinal coordinate of the road
      // just left, so the next crossing search starts past this intersection.
      v.position = place_on_road(g, v.heading, crossing, road, v.lane);
    }
  }
}

}  // namespace

ManhattanGrid ManhattanGrid::from_config(const SimConfig& cfg) {
  ManhattanGrid g;
  g.width = cfg.area_width_m;
  g.height = cfg.area_height_m;
  g.lane_width = cfg.lane_width_m;
  g.lanes_per_direction = cfg.lanes_per_direction;
  const double bw = cfg.area_width_m / cfg.blocks_x;
  const double bh = cfg.area_height_m / cfg.blocks_y;
  for (int j = 0; j < cfg.blocks_x; ++j) g.vertical_roads_x.push_back((j + 0.5) * bw);
  for (int j = 0; j < cfg.blocks_y; ++j) g.horizontal_roads_y.push_back((j + 0.5) * bh);
  return g;
}

TopologyState drop_vehicles(const SimConfig& cfg, Rng& rng) {
  cfg.validate();
  TopologyState topo;
  topo.grid = ManhattanGrid::from_config(cfg);
  const ManhattanGrid& g = topo.grid;
  topo.bs_position = {g.width / 2.0, g.height / 2.0};

  // Lane length is proportional to the road count times the road length.
  const double vertical_len = g.vertical_roads_x.size() * g.height;
  const double horizontal_len = g.horizontal_roads_y.size() * g.width;
  const double p_vertical = vertical_len / (vertical_len + horizontal_len);

  topo.vehicles.reserve(cfg.num_vehicles);
  for (int i = 0; i < cfg.num_vehicles; ++i) {
    Vehicle v;
    v.speed = cfg.speed_mps();
    const bool vertical = uniform01(rng) < p_vertical;
    const auto& roads = vertical ? g.vertical_roads_x : g.horizontal_roads_y;
    const double road = roads[uniform_index(rng, roads.size())];
    const bool positive = uniform01(rng) < 0.5;
    v.heading = vertical ? Vec2{0.0, positive ? 1.0 : -1.0} : Vec2{positive ? 1.0 : -1.0, 0.0};
    v.lane = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(g.lanes_per_direction)));
    const double along = uniform01(rng) * (vertical ? g.height : g.width);
    v.position = place_on_road(g, v.heading, road, along, v.lane);
    topo.vehicles.push_back(v);
  }

  for (int m = 0; m < cfg.num_v2i; ++m) topo.v2i_vehicles.push_back(m);
  for (int k = 0; k < cfg.num_v2v; ++k) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int u = 0; u < cfg.num_vehicles; ++u) {
      if (u == k) continue;
      const double d = (topo.vehicles[u].position - topo.vehicles[k].position).norm();
      if (d < best_d) {
        best_d = d;
        best = u;
      }
    }
    topo.v2v_pairs.push_back({k, best});
  }
  return topo;
}

TopologyState update_positions(const TopologyState& topo, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw UsageError("update_positions: dt must be > 0");
  TopologyState next = topo;
  for (Vehicle& v : next.vehicles) advance(next.grid, v, v.speed * dt, rng);
  return next;
}

double pair_distance(const TopologyState& topo, Node a, Node b) {
  auto pos = [&](Node n) {
    if (n.kind == Node::Kind::base_station) return topo.bs_position;
    if (n.index < 0 || n.index >= static_cast<int>(topo.vehicles.size()))
      throw UsageError("pair_distance: vehicle index out of range");
    return topo.vehicles[static_cast<std::size_t>(n.index)].position;
  };
  return (pos(a) - pos(b)).norm();
}

}  // namespace v2x
