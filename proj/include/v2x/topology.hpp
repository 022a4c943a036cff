#pragma once

#include <cmath>
#include <vector>

#include "v2x/config.hpp"
#include "v2x/rng.hpp"

namespace v2x {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  double norm() const { return std::hypot(x, y); }
  bool operator==(const Vec2&) const = default;
};

// Road layout: one two-way road through the middle of every block column
// (vertical roads) and block row (horizontal roads). The area wraps around
// at its borders, so every road is a closed loop.
struct ManhattanGrid {
  double width = 0.0;
  double height = 0.0;
  std::vector<double> vertical_roads_x;
  std::vector<double> horizontal_roads_y;
  double lane_width = 3.5;
  int lanes_per_direction = 2;

  static ManhattanGrid from_config(const SimConfig& cfg);
  bool contains(Vec2 p) const { return p.x >= 0 && p.x < width && p.y >= 0 && p.y < height; }
  bool operator==(const ManhattanGrid&) const = default;
};

struct Vehicle {
  Vec2 position;
  Vec2 heading;  // unit vector along one of the four road directions
  double speed = 0.0;
  int lane = 0;  // 0 = innermost lane of its direction
  bool operator==(const Vehicle&) const = default;
};

struct V2VPair {
  int tx = 0;
  int rx = 0;
  bool operator==(const V2VPair&) const = default;
};

struct TopologyState {
  ManhattanGrid grid;
  std::vector<Vehicle> vehicles;
  Vec2 bs_position;
  std::vector<int> v2i_vehicles;
  std::vector<V2VPair> v2v_pairs;
  bool operator==(const TopologyState&) const = default;
};

// A vehicle or the base station.
struct Node {
  enum class Kind { vehicle, base_station };
  Kind kind = Kind::vehicle;
  int index = 0;

  static Node vehicle(int i) { return {Kind::vehicle, i}; }
  static Node base_station() { return {Kind::base_station, 0}; }
};

// Drops config.num_vehicles vehicles uniformly on lane centerlines. Vehicles
// 0..M-1 carry the V2I links; vehicles 0..K-1 transmit the V2V links, each to
// its nearest other vehicle (ties to the lowest index).
TopologyState drop_vehicles(const SimConfig& cfg, Rng& rng);

// Moves every vehicle speed*dt along its lane. At each intersection the vehicle
// goes straight (p=0.5), turns left (0.25) or right (0.25). Leaving the area
// wraps to the opposite border on the same lane. Link pairings never change.
TopologyState update_positions(const TopologyState& topo, double dt, Rng& rng);

// Horizontal-plane Euclidean distance in meters.
double pair_distance(const TopologyState& topo, Node a, Node b);

}  // namespace v2x
