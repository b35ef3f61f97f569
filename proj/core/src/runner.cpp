// Copyright 2026 The Pigeon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pigeon/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "pigeon/errors.hpp"

namespace pigeon::runner {

using mapping::CellState;
using mapping::CostMap;
using planner::Action;
using policy::ConfirmResult;
using policy::Decision;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

Associations Associations::defaults() {
  Associations a;
  a.table_ = {
      {"potted plant", {"plant", "houseplant", "flowers", "flower"}},
      {"chair", {"armchair", "stool", "seat"}},
      {"sofa", {"couch", "armchair", "bed"}},
      {"bed", {"sofa", "couch"}},
      {"toilet", {"sink", "bathtub"}},
      {"tv", {"tv monitor", "television", "monitor", "screen"}},
  };
  return a;
}

Associations Associations::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw NotFoundError("cannot open associations file " + path.string());
  const auto j = nlohmann::json::parse(f, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw InvalidInputError("associations file must hold a JSON object");
  Associations a;
  for (const auto& [goal, labels] : j.items()) {
    if (!labels.is_array()) throw InvalidInputError("associations for '" + goal + "' must be a list");
    for (const auto& l : labels) a.table_[goal].push_back(l.get<std::string>());
  }
  return a;
}

bool Associations::associated(const std::string& label, const std::string& goal) const {
  if (label == goal) return true;
  const auto it = table_.find(goal);
  return it != table_.end() && std::find(it->second.begin(), it->second.end(), label) != it->second.end();
}

bool Associations::associated_any(const std::string& label, const std::vector<std::string>& goals) const {
  return std::any_of(goals.begin(), goals.end(), [&](const std::string& g) { return associated(label, g); });
}

void RunConfig::validate() const {
  if (!(tau_sus >= 0.0 && tau_sus <= 1.0)) throw InvalidInputError("tau_sus must lie in [0, 1]");
  if (tau_choice < 1) throw InvalidInputError("tau_choice must be at least 1");
  if (tau_confirm < 0) throw InvalidInputError("tau_confirm must be non-negative");
  if (!(t_prob >= 0.0 && t_prob <= 1.0)) throw InvalidInputError("T_prob must lie in [0, 1]");
  if (max_steps && *max_steps < 1) throw InvalidInputError("max_steps must be positive");
  if (jobs < 1) throw InvalidInputError("jobs must be at least 1");
  if (!(stop_radius > 0.0)) throw InvalidInputError("stop radius must be positive");
  if (!(sweep_radius > 0.0)) throw InvalidInputError("sweep radius must be positive");
  sim.camera.validate();
}

std::unique_ptr<policy::DecisionPolicy> make_policy(const RunConfig& cfg) {
  if (cfg.policy == "greedy") return std::make_unique<policy::GreedyOraclePolicy>();
  if (cfg.policy == "epsilon") return std::make_unique<policy::EpsilonGreedyPolicy>(cfg.t_prob);
  if (cfg.policy == "random") return std::make_unique<policy::RandomPolicy>();
  if (cfg.policy == "nearest-frontier") return std::make_unique<policy::NearestFrontierPolicy>();
  if (cfg.policy == "scripted") {
    policy::ScriptedResponder r;
    for (const auto& s : cfg.scripted_decisions) r.queue_decision_reply(s);
    for (const auto& s : cfg.scripted_confirmations) r.queue_confirmation_reply(s);
    return std::make_unique<policy::ScriptedPolicy>(std::move(r));
  }
  if (cfg.policy == "remote-vlm") {
    if (!policy::network_enabled()) throw OfflineViolation("the remote-vlm policy needs network access");
    return std::make_unique<policy::RemoteVlmPolicy>(cfg.remote);
  }
  throw InvalidInputError("unknown policy '" + cfg.policy + "'");
}

int EpisodeTrace::rejected_count() const {
  return static_cast<int>(std::count_if(confirmations.begin(), confirmations.end(),
                                        [](const ConfirmationEvent& c) { return c.result == ConfirmResult::Rejected; }));
}

namespace {

struct Leg {
  std::optional<int> poi;
  Point2 goal;
  bool frontier = false;
};

class Episode {
 public:
  Episode(const sim::Scene& scene, const RunConfig& cfg, const EpisodeOptions& opts, policy::DecisionPolicy& pol)
      : scene_(scene),
        cfg_(cfg),
        opts_(opts),
        policy_(pol),
        sim_(scene, cfg.sim, cfg.seed),
        oracle_(scene, scene.goal_categories),
        map_(scene.truth.geometry(), CellState::Unknown),
        policy_rng_(sim::make_stream(cfg.seed, "policy")),
        budget_(cfg.tau_confirm),
        max_steps_(cfg.max_steps.value_or(scene.max_steps)) {
    for (std::size_t i = 0; i < scene.goal_categories.size(); ++i)
      goal_text_ += (i ? " or " : "") + scene.goal_categories[i];
  }

  EpisodeTrace run() {
    trace_.scene = scene_.name;
    trace_.scene_path = opts_.scene_path;
    trace_.seed = cfg_.seed;
    trace_.policy = policy_.name();
    const auto t0 = std::chrono::steady_clock::now();
    const double initial = oracle_.distance(scene_.start.position());

    try {
      process(sim_.observe());
      rotate();
      loop();
      if (!ended()) act(Action::Stop);
    } catch (const std::exception& e) {
      trace_.record.failure = e.what();
      termination_ = "error";
      if (!ended()) sim_.force_timeout();
    }
    if (!ended()) sim_.force_timeout();

    const auto& st = sim_.state();
    if (st.timed_out && termination_.empty()) termination_ = "timeout";
    if (termination_.empty()) termination_ = "stop";
    const auto check = sim::check_success(scene_, st, oracle_);

    auto& r = trace_.record;
    r.scene = scene_.name;
    r.seed = cfg_.seed;
    r.success = check.success;
    r.path_length = st.path_length;
    r.shortest_path = initial;
    r.initial_distance = initial;
    r.final_distance = check.distance;
    r.steps = st.step;
    r.decision_count = decisions_;
    r.vlm_calls = policy_.calls();
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    trace_.steps = st.log;
    trace_.final_pose = st.pose;
    trace_.termination = termination_;
    for (const poi::PoI* p : store_.all())
      trace_.pois.push_back({p->id, p->kind, p->object_id, p->pose, p->state, p->created_step});
    return std::move(trace_);
  }

 private:
  const Pose& pose() const { return sim_.state().pose; }
  int step() const { return sim_.state().step; }
  bool ended() const { return sim_.state().stopped || sim_.state().timed_out; }

  void act(Action a) {
    if (ended()) return;
    if (step() >= max_steps_) {
      sim_.force_timeout();
      return;
    }
    process(sim_.step(a));
  }

  void rotate() {
    for (Action a : planner::full_rotation()) {
      if (ended() || stop_now_) return;
      act(a);
    }
  }

  // Map, cost maps, PoIs and detections for one observation.
  void process(const sim::Observation& obs) {
    const auto before = map_.cells();
    mapping::integrate_scan(map_, obs.scan);
    std::vector<int> newly_known;
    for (std::size_t i = 0; i < before.size(); ++i)
      if (before[i] == CellState::Unknown && map_.at(static_cast<int>(i)) != CellState::Unknown)
        newly_known.push_back(static_cast<int>(i));
    rebuild_costs();
    snapshot_.reset();
    frustum_.reset();

    for (int id : poi::refresh(store_, map_, std::nullopt)) log_poi(id, "archived");
    if (!newly_known.empty()) {
      for (Cell site : poi::new_frontier_sites(store_, map_, newly_known, cfg_.min_cluster)) {
        if (!explore_cost_.passable(site)) continue;
        poi::PoI p;
        p.kind = poi::PoiKind::Frontier;
        const Point2 w = map_.geometry().world_of(site);
        p.pose = {w.x, w.y, normalize_heading(std::atan2(w.y - pose().y, w.x - pose().x)), 0.0};
        add_poi(std::move(p));
      }
    }
    handle_detections(obs.detections);
  }

  void rebuild_costs() {
    auto params = cfg_.inflation;
    params.unknown_cost = cfg_.frontier_unknown_cost;
    explore_cost_ = mapping::inflate_obstacles(map_, params);
    known_cost_ = explore_cost_;
    for (int i = 0; i < map_.geometry().size(); ++i)
      if (map_.at(i) == CellState::Unknown) known_cost_.set(map_.geometry().cell_at(i), CostMap::kImpassable);
    for (Cell c : blocked_) {
      explore_cost_.set(c, CostMap::kImpassable);
      known_cost_.set(c, CostMap::kImpassable);
    }
  }

  SnapshotRef snapshot() {
    if (!snapshot_) {
      auto s = std::make_shared<Snapshot>();
      s->id = ++snapshot_counter_;
      s->image = sim_.render(pose());
      s->capture_pose = pose();
      s->capture_step = step();
      snapshot_ = std::move(s);
    }
    return snapshot_;
  }

  const mapping::Frustum& frustum() {
    if (!frustum_) frustum_ = mapping::frustum_cells(map_, pose(), cfg_.sim.sensor.fov, cfg_.sim.sensor.max_range);
    return *frustum_;
  }

  int add_poi(poi::PoI p) {
    p.extrinsics = pose();
    p.snapshot = snapshot();
    p.frustum = frustum();
    p.created_step = step();
    const int id = store_.add(std::move(p));
    log_poi(id, "created");
    return id;
  }

  void log_poi(int id, const char* event) {
    const auto& p = store_.get(id);
    trace_.poi_events.push_back({step(), id, event, p.kind, p.pose});
  }

  void archive(int id) {
    if (store_.archive(id)) log_poi(id, "archived");
  }

  void handle_detections(const std::vector<Detection>& detections) {
    const Detection* top = nullptr;
    for (const auto& d : detections) {
      if (!cfg_.associations.associated_any(d.label, scene_.goal_categories)) continue;
      if (rejected_.count(d.object_id)) continue;
      if (!top || d.confidence > top->confidence || (d.confidence == top->confidence && d.object_id < top->object_id))
        top = &d;
    }
    if (!top || !(top->confidence > cfg_.tau_sus)) return;
    const Detection det = *top;
    centroids_[det.object_id] = det.centroid_from(pose().position());
    if (confirmed_) return;

    if (auto p = poi::create_object_poi(det, pose(), map_, known_cost_, store_, cfg_.object_poi)) add_poi(std::move(*p));

    const bool goal_label = std::find(scene_.goal_categories.begin(), scene_.goal_categories.end(), det.label) !=
                            scene_.goal_categories.end();
    if (goal_label && budget_.can_attempt(det.object_id)) confirm(det.object_id, det.label, {snapshot()}, false);
  }

  void confirm(int object_id, const std::string& label, std::vector<SnapshotRef> images, bool multi_view) {
    const auto prompt = prompting::assemble_confirmation_prompt(images, goal_text_, cfg_.templates);
    policy::ConfirmContext ctx;
    ctx.prompt = &prompt;
    ctx.object_id = object_id;
    ctx.label = label;
    const auto* obj = scene_.find_object(object_id);
    ctx.is_goal = obj && scene_.is_goal(*obj);
    const auto result = policy::confirm_object(policy_, ctx, budget_, !multi_view);
    trace_.confirmations.push_back(
        {step(), object_id, label, multi_view, static_cast<int>(prompt.images.size()), result});
    if (result == ConfirmResult::Confirmed) {
      confirmed_ = object_id;
    } else if (result == ConfirmResult::Rejected) {
      rejected_.insert(object_id);
      for (const poi::PoI* p : store_.selectable())
        if (p->kind == poi::PoiKind::Object && p->object_id == object_id) archive(p->id);
    }
  }

  bool near_confirmed() const {
    if (!confirmed_) return false;
    const auto it = centroids_.find(*confirmed_);
    return it != centroids_.end() && distance(pose().position(), it->second) <= cfg_.stop_radius;
  }

  void loop() {
    const int guard = 4 * max_steps_ + 64;
    for (int iter = 0; iter < guard && !ended(); ++iter) {
      if (stop_now_ || near_confirmed()) {
        if (confirmed_) termination_ = "confirmed-stop";
        act(Action::Stop);
        return;
      }
      if (confirmed_ && approach_failures_ < 2) {
        approach();
        continue;
      }
      std::optional<int> target;
      while (!sweep_.empty() && !target) {
        const int id = sweep_.front();
        sweep_.erase(sweep_.begin());
        if (store_.get(id).state == poi::PoiState::Selectable) target = id;
      }
      if (!target) {
        sweep_ = planner::local_sweep(store_, pose(), cfg_.sweep_radius, cfg_.sweep_min);
        if (!sweep_.empty()) continue;
        bool retry = false;
        target = decide(retry);
        if (retry) continue;
      }
      if (!target) {
        termination_ = "exhausted";
        act(Action::Stop);
        return;
      }
      const auto& p = store_.get(*target);
      navigate({*target, p.pose.position(), p.kind == poi::PoiKind::Frontier});
    }
  }

  std::optional<int> decide(bool& retry) {
    retry = false;
    auto cands = poi::sample_candidates(store_, cfg_.tau_choice, pose(), explore_cost_);
    if (cands.candidates.empty()) return std::nullopt;
    const auto prompt =
        prompting::assemble_decision_prompt(cands, goal_text_, cfg_.templates, cfg_.sim.camera, pose());

    policy::DecisionContext ctx;
    ctx.prompt = &prompt;
    ctx.candidates = &cands;
    ctx.rng = &policy_rng_;
    ctx.goal = goal_text_;
    for (const auto& c : cands.candidates) {
      double d = kInf;
      try {
        d = oracle_.distance(c.pose.position());
      } catch (const StartBlockedError&) {
      }
      ctx.goal_distances.push_back(d);
    }

    ++decisions_;
    DecisionEvent ev;
    ev.step = step();
    ev.waypoint = waypoint_;
    for (const auto& c : cands.candidates) ev.candidate_ids.push_back(c.id);
    ev.goal_distances = ctx.goal_distances;
    ev.agent_distances = cands.agent_distances;
    ev.decision = policy_.decide(ctx);

    std::optional<std::size_t> pick;
    if (ev.decision.kind == Decision::Kind::Choose) {
      pick = static_cast<std::size_t>(ev.decision.number - 1);
    } else if (ev.decision.kind == Decision::Kind::Rotate && !last_rotate_) {
      last_rotate_ = true;
      ++trace_.rotate_reprompts;
      if (opts_.on_decision) ev.prompt_dir = opts_.on_decision(ev, prompt, cands);
      trace_.decisions.push_back(ev);
      rotate();
      retry = true;
      return std::nullopt;
    } else {
      ev.fallback = ev.decision.kind == Decision::Kind::Rotate ? "rotate-twice" : "uncertain";
      pick = nearest_frontier(cands);
    }
    last_rotate_ = false;
    ev.target_poi = cands.candidates[*pick].id;
    if (opts_.on_decision) ev.prompt_dir = opts_.on_decision(ev, prompt, cands);
    trace_.decisions.push_back(ev);
    store_.set_last_waypoint_step(step());
    ++waypoint_;
    return ev.target_poi;
  }

  static std::size_t nearest_frontier(const poi::CandidateSet& c) {
    std::optional<std::size_t> best;
    for (int pass = 0; pass < 2 && !best; ++pass) {
      for (std::size_t i = 0; i < c.candidates.size(); ++i) {
        if (pass == 0 && c.candidates[i].kind != poi::PoiKind::Frontier) continue;
        if (!std::isfinite(c.agent_distances[i])) continue;
        if (!best || c.agent_distances[i] < c.agent_distances[*best]) best = i;
      }
    }
    return best.value_or(0);
  }

  std::optional<planner::Path> plan(const Leg& leg) {
    const CostMap& cost = leg.frontier ? explore_cost_ : known_cost_;
    try {
      return planner::astar(cost, pose().position(), leg.goal);
    } catch (const StartBlockedError&) {
      // The agent cell is always observed free; an inflated neighbour set can
      // still wall it in after a blockage was marked. Plan from the
      // exploration map instead.
      try {
        return planner::astar(explore_cost_, pose().position(), leg.goal);
      } catch (const StartBlockedError&) {
        return std::nullopt;
      }
    }
  }

  bool path_blocked(const planner::FollowerState& fs, bool frontier) const {
    const CostMap& cost = frontier ? explore_cost_ : known_cost_;
    const auto& cells = fs.path.cells;
    for (std::size_t i = std::min(fs.target_index + 1, cells.size()); i < cells.size(); ++i)
      if (!cost.passable(cells[i])) return true;
    return false;
  }

  void end_leg(const Leg& leg, bool drop_target) {
    ++trace_.waypoint_events;
    if (drop_target && leg.poi) archive(*leg.poi);
  }

  // Returns true on arrival.
  bool navigate(const Leg& leg) {
    auto path = plan(leg);
    if (!path) {
      end_leg(leg, true);
      return false;
    }
    planner::FollowerState fs(std::move(*path));
    const bool had_confirmation = confirmed_.has_value();
    while (!ended()) {
      if (stop_now_ || near_confirmed()) return false;
      if (leg.poi && store_.get(*leg.poi).state != poi::PoiState::Selectable) {
        end_leg(leg, false);
        return false;
      }
      if (confirmed_ && !had_confirmation) return false;

      const Action a = planner::next_action(fs, pose(), cfg_.follower);
      if (a == Action::Stop) {
        ++trace_.waypoint_events;
        if (leg.poi) arrive(*leg.poi);
        return true;
      }
      const Pose before = pose();
      act(a);
      fs.record(a, before, static_cast<std::size_t>(cfg_.follower.stuck_window));

      if (path_blocked(fs, leg.frontier)) {
        auto re = plan(leg);
        if (!re) {
          end_leg(leg, true);
          return false;
        }
        fs.path = std::move(*re);
        fs.target_index = 0;
      }
      const CostMap& cost = leg.frontier ? explore_cost_ : known_cost_;
      const auto stuck = planner::detect_stuck_and_replan(fs, pose(), cost, cfg_.follower);
      for (Cell c : fs.blocked)
        if (std::find(blocked_.begin(), blocked_.end(), c) == blocked_.end()) blocked_.push_back(c);
      if (stuck.status == planner::StuckStatus::Escalate) {
        end_leg(leg, true);
        return false;
      }
    }
    return false;
  }

  void turn_to(double heading) {
    for (int i = 0; i < 12 && !ended(); ++i) {
      const double err = wrap_angle(heading - pose().heading);
      if (std::abs(err) <= cfg_.follower.heading_tolerance) return;
      act(err > 0 ? Action::TurnLeft : Action::TurnRight);
    }
  }

  void arrive(int id) {
    const poi::PoI target = store_.get(id);
    if (target.kind == poi::PoiKind::Object && !rejected_.count(target.object_id) && !confirmed_) {
      turn_to(target.face_heading);
      const auto* obj = scene_.find_object(target.object_id);
      Action tilt = Action::Stop;
      if (obj && obj->height_band == sim::HeightBand::High) tilt = Action::LookUp;
      if (obj && obj->height_band == sim::HeightBand::Floor) tilt = Action::LookDown;
      if (tilt != Action::Stop) act(tilt);
      if (!ended()) {
        std::vector<SnapshotRef> images{snapshot()};
        for (const poi::PoI* p : store_.all())
          if (p->kind == poi::PoiKind::Object && p->object_id == target.object_id && p->snapshot)
            images.push_back(p->snapshot);
        std::sort(images.begin(), images.end());
        images.erase(std::unique(images.begin(), images.end()), images.end());
        confirm(target.object_id, target.label, images, true);
      }
      if (tilt != Action::Stop && !near_confirmed())
        act(tilt == Action::LookUp ? Action::LookDown : Action::LookUp);
    }
    if (store_.contains(id))
      for (int archived : poi::refresh(store_, map_, id)) log_poi(archived, "archived");
  }

  void approach() {
    const auto it = centroids_.find(*confirmed_);
    if (it == centroids_.end()) {
      approach_failures_ = 2;
      return;
    }
    const Point2 c = it->second;
    const auto& g = map_.geometry();
    std::optional<Cell> best;
    for (const CostMap* cost : {&known_cost_, &explore_cost_}) {
      const Cell here[1] = {g.cell_of(pose().position())};
      const auto field = planner::geodesic_field(*cost, here);
      double best_cost = kInf;
      for (int i = 0; i < g.size(); ++i) {
        if (!std::isfinite(field[i]) || field[i] >= best_cost) continue;
        const Cell cell = g.cell_at(i);
        if (distance(g.world_of(cell), c) > cfg_.stop_radius - 0.5 * g.resolution) continue;
        best_cost = field[i];
        best = cell;
      }
      if (best) break;
    }
    if (!best) {
      ++approach_failures_;
      return;
    }
    const Leg leg{std::nullopt, g.world_of(*best), false};
    if (navigate(leg))
      stop_now_ = true;
    else if (!stop_now_ && !near_confirmed())
      ++approach_failures_;
  }

  const sim::Scene& scene_;
  const RunConfig& cfg_;
  const EpisodeOptions& opts_;
  policy::DecisionPolicy& policy_;
  sim::Simulator sim_;
  sim::DistanceOracle oracle_;
  mapping::GridMap map_;
  poi::PoIStore store_;
  std::mt19937_64 policy_rng_;
  policy::ConfirmationBudget budget_;
  int max_steps_;
  std::string goal_text_;

  CostMap explore_cost_;
  CostMap known_cost_;
  std::vector<Cell> blocked_;
  SnapshotRef snapshot_;
  std::optional<mapping::Frustum> frustum_;
  int snapshot_counter_ = 0;

  std::set<int> rejected_;
  std::optional<int> confirmed_;
  std::map<int, Point2> centroids_;
  std::vector<int> sweep_;
  bool stop_now_ = false;
  bool last_rotate_ = false;
  int approach_failures_ = 0;
  int decisions_ = 0;
  int waypoint_ = 0;
  std::string termination_;
  EpisodeTrace trace_;
};

nlohmann::ordered_json pose_json(const Pose& p) {
  return {{"x", p.x}, {"y", p.y}, {"heading", p.heading}, {"pitch", p.pitch}};
}

Pose pose_from(const nlohmann::json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("heading").get<double>(),
          j.value("pitch", 0.0)};
}

nlohmann::ordered_json finite_list(const std::vector<double>& v) {
  auto out = nlohmann::ordered_json::array();
  for (double d : v) {
    if (std::isfinite(d))
      out.push_back(d);
    else
      out.push_back(nullptr);
  }
  return out;
}

std::vector<double> list_from(const nlohmann::json& j) {
  std::vector<double> out;
  for (const auto& v : j) out.push_back(v.is_null() ? kInf : v.get<double>());
  return out;
}

nlohmann::ordered_json decision_json(const Decision& d) {
  nlohmann::ordered_json j;
  j["kind"] = d.kind == Decision::Kind::Choose ? "choose" : d.kind == Decision::Kind::Rotate ? "rotate" : "uncertain";
  j["number"] = d.number;
  return j;
}

Decision decision_from(const nlohmann::json& j) {
  const auto k = j.at("kind").get<std::string>();
  if (k == "choose") return Decision::choose(j.at("number").get<int>());
  if (k == "rotate") return Decision::rotate();
  return Decision::uncertain();
}

ConfirmResult confirm_from(const std::string& s) {
  if (s == "confirmed") return ConfirmResult::Confirmed;
  if (s == "rejected") return ConfirmResult::Rejected;
  return ConfirmResult::Unsure;
}

}  // namespace

EpisodeTrace run_episode(const sim::Scene& scene, const RunConfig& cfg, const EpisodeOptions& opts) {
  cfg.validate();
  std::unique_ptr<policy::DecisionPolicy> owned;
  policy::DecisionPolicy* pol = opts.policy;
  if (!pol) {
    owned = make_policy(cfg);
    pol = owned.get();
  }
  Episode ep(scene, cfg, opts, *pol);
  return ep.run();
}

nlohmann::ordered_json trace_to_json(const EpisodeTrace& t) {
  using oj = nlohmann::ordered_json;
  oj j;
  j["schema"] = "trace/1";
  j["scene"] = t.scene;
  j["scene_path"] = t.scene_path;
  j["seed"] = t.seed;
  j["policy"] = t.policy;
  j["termination"] = t.termination;
  j["record"] = metrics::to_json(t.record, false);
  j["final_pose"] = pose_json(t.final_pose);
  j["waypoint_events"] = t.waypoint_events;
  j["rotate_reprompts"] = t.rotate_reprompts;

  oj steps = oj::array();
  for (const auto& s : t.steps)
    steps.push_back({{"step", s.step},
                     {"action", planner::to_string(s.action)},
                     {"x", s.pose.x},
                     {"y", s.pose.y},
                     {"heading", s.pose.heading},
                     {"pitch", s.pose.pitch},
                     {"collision", s.collision},
                     {"n_detections", s.n_detections}});
  j["steps"] = steps;

  oj decisions = oj::array();
  for (const auto& d : t.decisions) {
    oj e;
    e["step"] = d.step;
    e["waypoint"] = d.waypoint;
    e["candidates"] = d.candidate_ids;
    e["goal_distances"] = finite_list(d.goal_distances);
    e["agent_distances"] = finite_list(d.agent_distances);
    e["decision"] = decision_json(d.decision);
    e["target_poi"] = d.target_poi;
    e["fallback"] = d.fallback;
    e["prompt_dir"] = d.prompt_dir;
    decisions.push_back(e);
  }
  j["decisions"] = decisions;

  oj confirmations = oj::array();
  for (const auto& c : t.confirmations)
    confirmations.push_back({{"step", c.step},
                             {"object_id", c.object_id},
                             {"label", c.label},
                             {"multi_view", c.multi_view},
                             {"images", c.images},
                             {"result", policy::to_string(c.result)}});
  j["confirmations"] = confirmations;

  oj events = oj::array();
  for (const auto& e : t.poi_events)
    events.push_back({{"step", e.step},
                      {"poi_id", e.poi_id},
                      {"event", e.event},
                      {"kind", poi::to_string(e.kind)},
                      {"x", e.pose.x},
                      {"y", e.pose.y}});
  j["poi_events"] = events;

  oj pois = oj::array();
  for (const auto& p : t.pois)
    pois.push_back({{"id", p.id},
                    {"kind", poi::to_string(p.kind)},
                    {"object_id", p.object_id},
                    {"x", p.pose.x},
                    {"y", p.pose.y},
                    {"heading", p.pose.heading},
                    {"state", poi::to_string(p.state)},
                    {"created_step", p.created_step}});
  j["pois"] = pois;
  return j;
}

EpisodeTrace trace_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != "trace/1") throw InvalidInputError("unsupported trace schema");
    EpisodeTrace t;
    t.scene = j.at("scene").get<std::string>();
    t.scene_path = j.value("scene_path", "");
    t.seed = j.at("seed").get<std::uint64_t>();
    t.policy = j.at("policy").get<std::string>();
    t.termination = j.value("termination", "");
    t.final_pose = pose_from(j.at("final_pose"));
    t.waypoint_events = j.value("waypoint_events", 0);
    t.rotate_reprompts = j.value("rotate_reprompts", 0);

    const auto& r = j.at("record");
    t.record.scene = r.at("scene").get<std::string>();
    t.record.seed = r.at("seed").get<std::uint64_t>();
    t.record.success = r.at("success").get<bool>();
    t.record.path_length = r.at("path_length").get<double>();
    t.record.shortest_path = r.at("shortest_path").get<double>();
    t.record.final_distance = r.at("final_distance").is_null() ? kInf : r.at("final_distance").get<double>();
    t.record.initial_distance = r.at("initial_distance").get<double>();
    t.record.steps = r.at("steps").get<int>();
    t.record.decision_count = r.at("decision_count").get<int>();
    t.record.vlm_calls = r.at("vlm_calls").get<int>();
    t.record.failure = r.value("failure", "");

    for (const auto& s : j.at("steps")) {
      sim::StepRecord rec;
      rec.step = s.at("step").get<int>();
      const auto a = planner::action_from_string(s.at("action").get<std::string>());
      if (!a) throw InvalidInputError("unknown action in trace");
      rec.action = *a;
      rec.pose = {s.at("x").get<double>(), s.at("y").get<double>(), s.at("heading").get<double>(),
                  s.value("pitch", 0.0)};
      rec.collision = s.at("collision").get<bool>();
      rec.n_detections = s.at("n_detections").get<int>();
      t.steps.push_back(rec);
    }
    for (const auto& d : j.at("decisions")) {
      DecisionEvent e;
      e.step = d.at("step").get<int>();
      e.waypoint = d.at("waypoint").get<int>();
      e.candidate_ids = d.at("candidates").get<std::vector<int>>();
      e.goal_distances = list_from(d.at("goal_distances"));
      e.agent_distances = list_from(d.at("agent_distances"));
      e.decision = decision_from(d.at("decision"));
      e.target_poi = d.at("target_poi").get<int>();
      e.fallback = d.value("fallback", "");
      e.prompt_dir = d.value("prompt_dir", "");
      t.decisions.push_back(e);
    }
    for (const auto& c : j.at("confirmations"))
      t.confirmations.push_back({c.at("step").get<int>(), c.at("object_id").get<int>(),
                                 c.at("label").get<std::string>(), c.at("multi_view").get<bool>(),
                                 c.at("images").get<int>(), confirm_from(c.at("result").get<std::string>())});
    for (const auto& e : j.at("poi_events")) {
      PoiEvent ev;
      ev.step = e.at("step").get<int>();
      ev.poi_id = e.at("poi_id").get<int>();
      ev.event = e.at("event").get<std::string>();
      ev.kind = e.at("kind").get<std::string>() == "object" ? poi::PoiKind::Object : poi::PoiKind::Frontier;
      ev.pose = {e.at("x").get<double>(), e.at("y").get<double>(), 0.0, 0.0};
      t.poi_events.push_back(ev);
    }
    for (const auto& p : j.at("pois")) {
      PoiSummary s;
      s.id = p.at("id").get<int>();
      s.kind = p.at("kind").get<std::string>() == "object" ? poi::PoiKind::Object : poi::PoiKind::Frontier;
      s.object_id = p.value("object_id", -1);
      s.pose = {p.at("x").get<double>(), p.at("y").get<double>(), p.at("heading").get<double>(), 0.0};
      s.state = p.at("state").get<std::string>() == "archived" ? poi::PoiState::Archived : poi::PoiState::Selectable;
      s.created_step = p.at("created_step").get<int>();
      t.pois.push_back(s);
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("malformed trace: ") + e.what());
  }
}

std::string trajectory_jsonl(const EpisodeTrace& t) {
  std::string out;
  for (const auto& s : t.steps) {
    nlohmann::ordered_json j;
    j["step"] = s.step;
    j["action"] = planner::to_string(s.action);
    j["x"] = s.pose.x;
    j["y"] = s.pose.y;
    j["heading"] = s.pose.heading;
    j["collision"] = s.collision;
    j["n_detections"] = s.n_detections;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Replay replay(const sim::Scene& scene, const RunConfig& cfg, std::uint64_t seed, const std::vector<Action>& actions) {
  sim::Simulator sim(scene, cfg.sim, seed);
  Replay out;
  out.map = mapping::GridMap(scene.truth.geometry(), CellState::Unknown);
  mapping::integrate_scan(out.map, sim.observe().scan);
  out.poses.push_back(sim.state().pose);
  for (Action a : actions) {
    const auto obs = sim.step(a);
    mapping::integrate_scan(out.map, obs.scan);
    out.poses.push_back(sim.state().pose);
  }
  out.final_pose = sim.state().pose;
  return out;
}

namespace {

struct Job {
  const sim::Scene* scene;
  std::string path;
  std::uint64_t seed;
};

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

std::vector<std::filesystem::path> sorted_paths(std::vector<std::filesystem::path> scenes) {
  std::sort(scenes.begin(), scenes.end());
  scenes.erase(std::unique(scenes.begin(), scenes.end()), scenes.end());
  return scenes;
}

EpisodeTrace failed_trace(const sim::Scene& scene, const std::string& path, std::uint64_t seed,
                          const std::string& policy, const std::string& why) {
  EpisodeTrace t;
  t.scene = scene.name;
  t.scene_path = path;
  t.seed = seed;
  t.policy = policy;
  t.termination = "error";
  t.record.scene = scene.name;
  t.record.seed = seed;
  t.record.failure = why;
  try {
    const double d = sim::oracle_distance(scene, scene.start.position(), scene.goal_categories);
    t.record.shortest_path = d;
    t.record.initial_distance = d;
    t.record.final_distance = d;
  } catch (const std::exception&) {
  }
  return t;
}

}  // namespace

BatchResult run_batch(const std::vector<std::filesystem::path>& scenes, const std::vector<std::uint64_t>& seeds,
                      const RunConfig& cfg, bool include_timing) {
  cfg.validate();
  BatchResult out;
  std::vector<std::unique_ptr<sim::Scene>> loaded;
  std::vector<Job> jobs;
  for (const auto& p : sorted_paths(scenes)) {
    try {
      loaded.push_back(std::make_unique<sim::Scene>(sim::load_scene(p)));
    } catch (const std::exception& e) {
      out.load_failures.push_back(p.string() + ": " + e.what());
      continue;
    }
    for (auto seed : seeds) jobs.push_back({loaded.back().get(), p.string(), seed});
  }

  out.traces.resize(jobs.size());
  parallel_for(jobs.size(), cfg.jobs, [&](std::size_t i) {
    RunConfig c = cfg;
    c.seed = jobs[i].seed;
    EpisodeOptions opts;
    opts.scene_path = jobs[i].path;
    try {
      out.traces[i] = run_episode(*jobs[i].scene, c, opts);
    } catch (const std::exception& e) {
      out.traces[i] = failed_trace(*jobs[i].scene, jobs[i].path, jobs[i].seed, cfg.policy, e.what());
    }
  });
  for (const auto& t : out.traces) out.records.push_back(t.record);

  if (!out.records.empty()) out.report = metrics::aggregate_report(out.records, include_timing);
  for (const auto& f : out.load_failures) out.report.notes.push_back("load failure: " + f);
  std::sort(out.report.notes.begin(), out.report.notes.end());
  return out;
}

DatasetResult collect_dataset(const std::vector<std::filesystem::path>& scenes,
                              const std::vector<std::uint64_t>& seeds, RunConfig cfg,
                              const std::filesystem::path& out_dir) {
  cfg.policy = "epsilon";
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  std::vector<std::unique_ptr<sim::Scene>> loaded;
  std::vector<Job> jobs;
  DatasetResult res;
  for (const auto& p : sorted_paths(scenes)) {
    try {
      loaded.push_back(std::make_unique<sim::Scene>(sim::load_scene(p)));
    } catch (const std::exception&) {
      ++res.failed_episodes;
      continue;
    }
    for (auto seed : seeds) jobs.push_back({loaded.back().get(), p.string(), seed});
  }

  std::vector<std::vector<std::string>> per_episode(jobs.size());
  std::vector<char> failed(jobs.size(), 0);
  parallel_for(jobs.size(), cfg.jobs, [&](std::size_t i) {
    RunConfig c = cfg;
    c.seed = jobs[i].seed;
    const auto& scene = *jobs[i].scene;
    EpisodeOptions opts;
    opts.scene_path = jobs[i].path;
    opts.on_decision = [&, i](const DecisionEvent& ev, const prompting::DecisionPrompt& prompt,
                              const poi::CandidateSet&) -> std::string {
      if (ev.decision.kind != Decision::Kind::Choose) return "";
      const std::string dir = "prompts/" + scene.name + "_s" + std::to_string(jobs[i].seed) + "_w" +
                              std::to_string(ev.waypoint);
      prompting::write_prompt_archive(prompt, out_dir / dir);
      rlvr::RlvrSample s;
      s.scene = scene.name;
      s.episode = static_cast<int>(i);
      s.waypoint = ev.waypoint;
      s.prompt_dir = dir;
      s.distances = ev.goal_distances;
      s.chosen = ev.decision.number;
      s.t_prob = c.t_prob;
      s.seed = jobs[i].seed;
      per_episode[i].push_back(rlvr::to_jsonl(s));
      return dir;
    };
    try {
      const auto trace = run_episode(scene, c, opts);
      if (!trace.record.failure.empty()) failed[i] = 1;
    } catch (const std::exception&) {
      failed[i] = 1;
    }
  });

  std::ofstream f(out_dir / "dataset.jsonl", std::ios::binary);
  if (!f) throw Error("cannot write " + (out_dir / "dataset.jsonl").string());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    ++res.episodes;
    res.failed_episodes += failed[i];
    for (auto& line : per_episode[i]) {
      f << line << '\n';
      res.lines.push_back(std::move(line));
    }
  }
  return res;
}

}  // namespace pigeon::runner
