#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "metro/cli.hpp"

namespace metro {
namespace {

using nlohmann::json;

// Reads keys out of one JSON object, rejecting unknown ones and reporting
// type errors with their dotted path.
class Section {
 public:
  Section(const json& root, std::string name) : name_(std::move(name)) {
    if (!root.contains(name_)) return;
    const json& obj = root.at(name_);
    if (!obj.is_object()) throw ScenarioError(name_, "must be an object");
    obj_ = &obj;
  }
  Section(const json* obj, std::string path)
      : name_(std::move(path)), obj_(obj) {}

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (obj_ == nullptr || !obj_->contains(key)) return;
    try {
      out = obj_->at(key).get<T>();
    } catch (const json::exception&) {
      throw ScenarioError(path(key), "has the wrong type");
    }
  }

  void read_optional(const char* key, std::optional<double>& out) {
    seen_.insert(key);
    if (obj_ == nullptr || !obj_->contains(key)) return;
    const json& v = obj_->at(key);
    if (v.is_null()) {
      out.reset();
      return;
    }
    if (!v.is_number()) throw ScenarioError(path(key), "must be a number");
    out = v.get<double>();
  }

  const json* child(const char* key) {
    seen_.insert(key);
    if (obj_ == nullptr || !obj_->contains(key)) return nullptr;
    return &obj_->at(key);
  }

  void reject_unknown() const {
    if (obj_ == nullptr) return;
    for (const auto& [key, value] : obj_->items()) {
      if (!seen_.count(key)) throw ScenarioError(path(key), "unknown key");
    }
  }

  std::string path(const std::string& key) const { return name_ + "." + key; }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::set<std::string, std::less<>> seen_;
};

ProfileMode parse_profile_mode(const std::string& s) {
  if (s == "fixed_profile") return ProfileMode::kFixedProfile;
  if (s == "physics") return ProfileMode::kPhysics;
  throw ScenarioError("scenario.profile_mode",
                      "must be fixed_profile or physics, got " + s);
}

Policy parse_policy(const std::string& s) {
  if (s == "fixed") return Policy::kFixedTimetable;
  if (s == "pres") return Policy::kPReS;
  throw ScenarioError("scenario.policy", "must be fixed or pres, got " + s);
}

void read_envelope(Section& train, const char* key, ForceSpeedEnvelope& env) {
  const json* node = train.child(key);
  if (node == nullptr) return;
  if (!node->is_object()) throw ScenarioError(train.path(key), "must be an object");
  Section s(node, train.path(key));
  double force = env.base_force_N, speed = env.base_speed_kmh;
  s.read("base_force_N", force);
  s.read("base_speed_kmh", speed);
  s.reject_unknown();
  env = ForceSpeedEnvelope::from_corner(force, speed);
}

std::vector<TrackSegment> read_segments(const json& list,
                                        const std::string& path) {
  if (!list.is_array()) throw ScenarioError(path, "must be a list");
  std::vector<TrackSegment> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string item = path + "[" + std::to_string(i) + "]";
    if (!list[i].is_object()) throw ScenarioError(item, "must be an object");
    Section s(&list[i], item);
    TrackSegment seg;
    s.read("length_m", seg.length_m);
    s.read("gradient_angle_rad", seg.gradient_angle_rad);
    std::optional<double> radius;
    s.read_optional("curve_radius_m", radius);
    if (radius) seg.curve_radius_m = *radius;
    s.read("gauge_coefficient", seg.gauge_coefficient);
    s.read("is_tunnel", seg.is_tunnel);
    s.read("nominal_travel_time_s", seg.nominal_travel_time_s);
    s.reject_unknown();
    out.push_back(seg);
  }
  return out;
}

json segments_to_json(const std::vector<TrackSegment>& segs) {
  json list = json::array();
  for (const auto& g : segs) {
    list.push_back({{"length_m", g.length_m},
                    {"gradient_angle_rad", g.gradient_angle_rad},
                    {"curve_radius_m",
                     g.is_straight() ? json(nullptr) : json(g.curve_radius_m)},
                    {"gauge_coefficient", g.gauge_coefficient},
                    {"is_tunnel", g.is_tunnel},
                    {"nominal_travel_time_s", g.nominal_travel_time_s}});
  }
  return list;
}

bool blank(const std::string& text) {
  for (unsigned char c : text) {
    if (!std::isspace(c)) return false;
  }
  return true;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json root = json::object();
  if (!blank(text)) {
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ScenarioError("<config>", std::string("parse error: ") + e.what());
    }
  }
  if (!root.is_object()) throw ScenarioError("<config>", "must be an object");
  for (const auto& [key, value] : root.items()) {
    if (key != "scenario" && key != "scheduler" && key != "train" &&
        key != "segments") {
      throw ScenarioError(key, "unknown section");
    }
  }

  Scenario s;
  Section sc(root, "scenario");
  sc.read("stations", s.stations);
  sc.read("up_segment_times_s", s.up_segment_times_s);
  sc.read("down_segment_times_s", s.down_segment_times_s);
  sc.read("out_of_range_time_s", s.out_of_range_time_s);
  sc.read("dispatch_headway_s", s.dispatch_headway_s);
  sc.read("min_headway_s", s.min_headway_s);
  sc.read("dwell_time_s", s.dwell_time_s);
  sc.read("tick_s", s.tick_s);
  sc.read("sim_duration_s", s.sim_duration_s);
  sc.read("per_train_profile_kW", s.per_train_profile_kW);
  std::string mode = profile_mode_name(s.profile_mode);
  sc.read("profile_mode", mode);
  s.profile_mode = parse_profile_mode(mode);
  std::string policy = policy_name(s.policy);
  sc.read("policy", policy);
  s.policy = parse_policy(policy);
  sc.read("rng_seed", s.rng_seed);
  sc.read_optional("reporting_threshold_kW", s.reporting_threshold_kW);
  sc.reject_unknown();

  Section sch(root, "scheduler");
  auto& p = s.scheduler_params;
  sch.read("w1", p.w1);
  sch.read("w2", p.w2);
  sch.read("gamma1", p.gamma1_value);
  sch.read("gamma2_per_new_train", p.gamma2_per_new_train);
  sch.read("p_threshold_kW", p.p_threshold_kW);
  sch.reject_unknown();
  p.h_min_s = s.min_headway_s;
  p.dt_s = s.tick_s;

  Section tr(root, "train");
  tr.read("mass_tonnes", s.train.mass_tonnes);
  tr.read("axle_count", s.train.axle_count);
  tr.read("car_count", s.train.car_count);
  tr.read("frontal_area_m2", s.train.frontal_area_m2);
  tr.read("tunnel_factor", s.train.tunnel_factor);
  tr.read("max_speed_kmh", s.train.max_speed_kmh);
  read_envelope(tr, "traction", s.train.traction_envelope);
  read_envelope(tr, "braking", s.train.braking_envelope);
  tr.read("cruise_speed_fraction", s.duty_cycle.cruise_speed_fraction);
  tr.read("coast_exit_fraction", s.duty_cycle.coast_exit_fraction);
  tr.read("comfort_factor", s.duty_cycle.comfort_factor);
  tr.read("internal_dt_s", s.duty_cycle.internal_dt_s);
  tr.reject_unknown();

  Section sg(root, "segments");
  if (const json* up = sg.child("up")) {
    s.up_segments = read_segments(*up, "segments.up");
  }
  if (const json* down = sg.child("down")) {
    s.down_segments = read_segments(*down, "segments.down");
  }
  sg.reject_unknown();
  // Segment times default to the scenario's.
  for (auto [segs, times] :
       {std::pair{&s.up_segments, &s.up_segment_times_s},
        std::pair{&s.down_segments, &s.down_segment_times_s}}) {
    for (std::size_t i = 0; i < segs->size() && i < times->size(); ++i) {
      if ((*segs)[i].nominal_travel_time_s == 0.0) {
        (*segs)[i].nominal_travel_time_s = (*times)[i];
      }
    }
  }

  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ScenarioError("<config>", "cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string dump_scenario(const Scenario& s) {
  json root;
  root["scenario"] = {
      {"stations", s.stations},
      {"up_segment_times_s", s.up_segment_times_s},
      {"down_segment_times_s", s.down_segment_times_s},
      {"out_of_range_time_s", s.out_of_range_time_s},
      {"dispatch_headway_s", s.dispatch_headway_s},
      {"min_headway_s", s.min_headway_s},
      {"dwell_time_s", s.dwell_time_s},
      {"tick_s", s.tick_s},
      {"sim_duration_s", s.sim_duration_s},
      {"per_train_profile_kW", s.per_train_profile_kW},
      {"profile_mode", profile_mode_name(s.profile_mode)},
      {"policy", policy_name(s.policy)},
      {"rng_seed", s.rng_seed},
      {"reporting_threshold_kW", s.reporting_threshold_kW
                                     ? json(*s.reporting_threshold_kW)
                                     : json(nullptr)}};
  const auto& p = s.scheduler_params;
  root["scheduler"] = {{"w1", p.w1},
                       {"w2", p.w2},
                       {"gamma1", p.gamma1_value},
                       {"gamma2_per_new_train", p.gamma2_per_new_train},
                       {"p_threshold_kW", p.p_threshold_kW}};
  const auto& t = s.train;
  root["train"] = {
      {"mass_tonnes", t.mass_tonnes},
      {"axle_count", t.axle_count},
      {"car_count", t.car_count},
      {"frontal_area_m2", t.frontal_area_m2},
      {"tunnel_factor", t.tunnel_factor},
      {"max_speed_kmh", t.max_speed_kmh},
      {"traction",
       {{"base_force_N", t.traction_envelope.base_force_N},
        {"base_speed_kmh", t.traction_envelope.base_speed_kmh}}},
      {"braking",
       {{"base_force_N", t.braking_envelope.base_force_N},
        {"base_speed_kmh", t.braking_envelope.base_speed_kmh}}},
      {"cruise_speed_fraction", s.duty_cycle.cruise_speed_fraction},
      {"coast_exit_fraction", s.duty_cycle.coast_exit_fraction},
      {"comfort_factor", s.duty_cycle.comfort_factor},
      {"internal_dt_s", s.duty_cycle.internal_dt_s}};
  root["segments"] = {{"up", segments_to_json(s.up_segments)},
                      {"down", segments_to_json(s.down_segments)}};
  return root.dump(2) + "\n";
}

}  // namespace metro
