#include "trisim/planner.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <utility>

namespace trisim {

void Obstacle::validate() const {
  if (!(radius >= 0.0)) throw std::invalid_argument("obstacle radius must be non-negative");
  if (!(safety_margin >= 0.0)) throw std::invalid_argument("obstacle safety_margin must be non-negative");
}

namespace {

using Edge = std::pair<std::size_t, std::size_t>;

Edge make_edge(std::size_t a, std::size_t b) { return a < b ? Edge{a, b} : Edge{b, a}; }

bool formed_edge(Vec2 a, Vec2 b, const PlannerConfig& c) { return std::abs(distance(a, b) - c.side) <= c.tol_form; }

/// Formed triangles among robots not in `skip`, as sorted id triples.
std::vector<std::array<std::size_t, 3>> formed_triangles(std::span<const Vec2> p, std::size_t skip,
                                                         const PlannerConfig& c) {
  std::vector<std::array<std::size_t, 3>> out;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i == skip) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == skip || !formed_edge(p[i], p[j], c)) continue;
      for (std::size_t k = j + 1; k < n; ++k) {
        if (k == skip) continue;
        if (formed_edge(p[j], p[k], c) && formed_edge(p[i], p[k], c)) out.push_back({i, j, k});
      }
    }
  }
  return out;
}

bool occupied(std::span<const Vec2> positions, Vec2 v, double radius) {
  return std::any_of(positions.begin(), positions.end(), [&](Vec2 p) { return distance(p, v) < radius; });
}

std::vector<Vec2> collapse(std::vector<Vec2> pts) {
  std::vector<Vec2> out;
  for (const Vec2& p : pts) {
    if (out.empty() || distance(out.back(), p) > 1e-9) out.push_back(p);
  }
  return out;
}

}  // namespace

std::size_t select_moving_robot(std::span<const Vec2> positions, Vec2 destination,
                                std::span<const std::size_t> excluded) {
  std::optional<std::size_t> best;
  double best_d = -1.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (std::find(excluded.begin(), excluded.end(), i) != excluded.end()) continue;
    const double d = distance(positions[i], destination);
    if (d > best_d) {
      best_d = d;
      best = i;
    }
  }
  if (!best) throw PlanningError("no robot left to select as the moving robot");
  return *best;
}

std::vector<Candidate> candidate_vertices(std::span<const Vec2> positions, std::size_t moving_robot,
                                          const PlannerConfig& config) {
  const Vec2 mover = positions[moving_robot];
  std::vector<Candidate> out;
  std::vector<double> centroid_dist;
  for (const auto& t : formed_triangles(positions, moving_robot, config)) {
    const Vec2 centroid = (positions[t[0]] + positions[t[1]] + positions[t[2]]) / 3.0;
    const double cd = distance(centroid, mover);
    for (int e = 0; e < 3; ++e) {
      const std::size_t a = t[e];
      const std::size_t b = t[(e + 1) % 3];
      const std::size_t o = t[(e + 2) % 3];
      const Vec2 pa = positions[a];
      const Vec2 pb = positions[b];
      const Vec2 po = positions[o];
      // Apex on the far side of a-b from the opposite beacon.
      const Side side = cross(pb - pa, po - pa) > 0.0 ? Side::kRight : Side::kLeft;
      const Vec2 apex = third_vertex(pa, pb, side);
      if (occupied(positions, apex, config.occupied_radius)) continue;
      auto same = std::find_if(out.begin(), out.end(),
                               [&](const Candidate& c) { return distance(c.vertex, apex) < config.occupied_radius; });
      Candidate cand{apex, {a, b, o}, {pa, pb, po}};
      if (same == out.end()) {
        out.push_back(cand);
        centroid_dist.push_back(cd);
      } else {
        const auto idx = static_cast<std::size_t>(same - out.begin());
        if (cd < centroid_dist[idx]) {
          *same = cand;
          centroid_dist[idx] = cd;
        }
      }
    }
  }
  return out;
}

std::vector<Vec2> inner_path(const std::array<Vec2, 3>& beacons, Vec2 mover_pos, Vec2 target_vertex) {
  const std::array<Vec2, 3> mids{midpoint(beacons[0], beacons[1]), midpoint(beacons[1], beacons[2]),
                                 midpoint(beacons[2], beacons[0])};
  auto nearest = [&](Vec2 p) {
    return *std::min_element(mids.begin(), mids.end(),
                             [&](Vec2 a, Vec2 b) { return distance(a, p) < distance(b, p); });
  };
  return collapse({nearest(mover_pos), nearest(target_vertex), target_vertex});
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 <= 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

bool segment_hits_circle(Vec2 a, Vec2 b, Vec2 center, double radius) {
  return point_segment_distance(center, a, b) <= radius;
}

bool path_blocked(Vec2 mover_pos, std::span<const Vec2> path, std::span<const Obstacle> obstacles) {
  for (const Obstacle& ob : obstacles) {
    Vec2 prev = mover_pos;
    for (const Vec2& p : path) {
      if (segment_hits_circle(prev, p, ob.center, ob.zone_radius())) return true;
      prev = p;
    }
  }
  return false;
}

std::optional<Candidate> select_target_vertex(std::span<const Candidate> candidates, Vec2 destination,
                                              std::span<const Obstacle> obstacles, Vec2 mover_pos,
                                              const PathBuilder& build_path) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return distance(candidates[a].vertex, destination) < distance(candidates[b].vertex, destination);
  });
  for (std::size_t i : order) {
    const Candidate& c = candidates[i];
    const bool vertex_in_zone = std::any_of(obstacles.begin(), obstacles.end(), [&](const Obstacle& ob) {
      return distance(c.vertex, ob.center) <= ob.zone_radius();
    });
    if (vertex_in_zone) continue;
    if (!path_blocked(mover_pos, build_path(c), obstacles)) return c;
  }
  return std::nullopt;
}

std::optional<Candidate> select_target_vertex(std::span<const Candidate> candidates, Vec2 destination,
                                              std::span<const Obstacle> obstacles, Vec2 mover_pos) {
  return select_target_vertex(candidates, destination, obstacles, mover_pos, [&](const Candidate& c) {
    return inner_path(c.beacon_positions, mover_pos, c.vertex);
  });
}

std::vector<Vec2> formation_path(std::span<const Vec2> positions, std::size_t moving_robot,
                                 const Candidate& candidate, const PlannerConfig& config) {
  const Vec2 mover = positions[moving_robot];
  const BeaconTriangle& bt = candidate.beacons;
  const std::array<std::size_t, 3> beacon_ids{bt.base_a, bt.base_b, bt.opposite};
  int adjacent = 0;
  for (std::size_t id : beacon_ids) adjacent += formed_edge(positions[id], mover, config) ? 1 : 0;
  if (adjacent >= 2) return inner_path(candidate.beacon_positions, mover, candidate.vertex);

  // Shortest chain of shared-edge midpoints from an edge facing the mover to
  // the beacon base.
  const auto triangles = formed_triangles(positions, moving_robot, config);
  std::map<Edge, std::vector<Edge>> neighbours;
  for (const auto& t : triangles) {
    const std::array<Edge, 3> es{make_edge(t[0], t[1]), make_edge(t[1], t[2]), make_edge(t[0], t[2])};
    for (const Edge& a : es) {
      for (const Edge& b : es) {
        if (a != b) neighbours[a].push_back(b);
      }
    }
  }
  auto mid = [&](const Edge& e) { return midpoint(positions[e.first], positions[e.second]); };

  std::map<Edge, double> cost;
  std::map<Edge, Edge> parent;
  using Item = std::pair<double, Edge>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (const auto& [e, _] : neighbours) {
    if (formed_edge(positions[e.first], mover, config) && formed_edge(positions[e.second], mover, config)) {
      const double c = distance(mover, mid(e));
      cost[e] = c;
      queue.push({c, e});
    }
  }
  const Edge goal = make_edge(bt.base_a, bt.base_b);
  while (!queue.empty()) {
    const auto [c, e] = queue.top();
    queue.pop();
    if (c > cost[e]) continue;
    if (e == goal) break;
    for (const Edge& nb : neighbours[e]) {
      const double nc = c + distance(mid(e), mid(nb));
      auto it = cost.find(nb);
      if (it == cost.end() || nc < it->second) {
        cost[nb] = nc;
        parent[nb] = e;
        queue.push({nc, nb});
      }
    }
  }
  if (!cost.contains(goal)) return inner_path(candidate.beacon_positions, mover, candidate.vertex);
  std::vector<Vec2> chain{candidate.vertex};
  for (Edge e = goal;;) {
    chain.push_back(mid(e));
    auto it = parent.find(e);
    if (it == parent.end()) break;
    e = it->second;
  }
  std::reverse(chain.begin(), chain.end());
  return collapse(std::move(chain));
}

bool can_release(std::span<const Vec2> positions, std::size_t moving_robot, const PlannerConfig& config) {
  std::vector<bool> covered(positions.size(), false);
  for (const auto& t : formed_triangles(positions, moving_robot, config)) {
    for (std::size_t id : t) covered[id] = true;
  }
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (i != moving_robot && !covered[i]) return false;
  }
  return true;
}

PlanStep plan_n_robot_step(std::span<const Vec2> positions, Vec2 destination, std::span<const Obstacle> obstacles,
                           const PlannerConfig& config) {
  if (positions.size() < 4) throw PlanningError("a formation needs at least four robots");
  std::vector<std::size_t> tried;
  while (tried.size() < positions.size()) {
    const std::size_t mover = select_moving_robot(positions, destination, tried);
    tried.push_back(mover);
    if (!can_release(positions, mover, config)) continue;
    const auto candidates = candidate_vertices(positions, mover, config);
    if (candidates.empty()) continue;
    const auto chosen = select_target_vertex(candidates, destination, obstacles, positions[mover],
                                             [&](const Candidate& c) {
                                               return formation_path(positions, mover, c, config);
                                             });
    if (chosen) {
      return {mover, chosen->vertex, formation_path(positions, mover, *chosen, config), chosen->beacons};
    }
  }
  throw PlanningError("every candidate vertex of every robot is blocked");
}

bool destination_reached(std::span<const Vec2> positions, const TriangularLattice& lattice, Vec2 destination,
                         double occupied_radius) {
  return occupied(positions, lattice.point(lattice.nearest(destination)), occupied_radius);
}

}  // namespace trisim
