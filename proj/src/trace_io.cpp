#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "metro/cli.hpp"

namespace metro {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  return v;
}

int parse_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not an integer: '" + s + "'");
  }
  return v;
}

nlohmann::ordered_json stats_to_json(const PolicyStats& s) {
  return {{"exceedance_count", s.exceedance_count},
          {"exceedance_tick_count", s.exceedance_tick_count},
          {"max_total_power_kW", s.max_total_power_kW},
          {"mean_power_kW", s.mean_power_kW},
          {"energy_kWh", s.energy_kWh},
          {"regen_utilized_kWh", s.regen_utilized_kWh},
          {"regen_wasted_kWh", s.regen_wasted_kWh},
          {"travel_time_mean_s", s.travel_time_mean_s},
          {"travel_time_std_s", s.travel_time_std_s},
          {"travel_time_quartiles_s", s.travel_time_quartiles_s},
          {"completed_train_count", s.completed_train_count},
          {"launched_train_count", s.launched_train_count}};
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

void write_trace_csv(const SimTrace& trace, bool per_train, std::ostream& os) {
  os << "time_s,total_power_kW,waiting_count,authorized_count,d_plus_kW,"
        "d_minus_kW,regen_kW,departure_demand_kW";
  const int trains = trace.launch_count();
  if (per_train) {
    for (int id = 0; id < trains; ++id) os << ",train_" << id << "_kW";
  }
  os << "\n";
  std::vector<double> row(static_cast<std::size_t>(trains));
  for (const auto& t : trace.ticks) {
    os << format_number(t.time_s) << ',' << format_number(t.total_power_kW)
       << ',' << t.waiting_count << ',' << t.authorized_count << ','
       << format_number(t.d_plus_kW) << ',' << format_number(t.d_minus_kW)
       << ',' << format_number(t.regenerated_kW) << ','
       << format_number(t.departure_demand_kW);
    if (per_train) {
      std::fill(row.begin(), row.end(), 0.0);
      for (const auto& s : t.trains) {
        row[static_cast<std::size_t>(s.train_id)] = s.power_kW;
      }
      for (double p : row) os << ',' << format_number(p);
    }
    os << "\n";
  }
}

void write_train_summary_csv(const SimTrace& trace, std::ostream& os) {
  os << "train_id,launch_s,complete_s,travel_s,delay_vs_timetable_s\n";
  for (const auto& t : trace.trains) {
    os << t.train_id << ',' << format_number(t.launch_s) << ',';
    if (t.complete_s) {
      os << format_number(*t.complete_s) << ',' << format_number(*t.travel_s())
         << ',' << format_number(*t.complete_s - t.scheduled_completion_s);
    } else {
      os << ",,";
    }
    os << "\n";
  }
}

SimTrace read_trace_csv(std::istream& trace_csv, std::istream& summary_csv,
                        Policy policy) {
  SimTrace trace;
  trace.policy = policy;
  std::string line;
  if (!std::getline(trace_csv, line)) {
    throw std::invalid_argument("trace CSV is empty");
  }
  while (std::getline(trace_csv, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() < 8) throw std::invalid_argument("short trace row: " + line);
    TickRecord t;
    t.time_s = parse_number(f[0]);
    t.total_power_kW = parse_number(f[1]);
    t.waiting_count = parse_int(f[2]);
    t.authorized_count = parse_int(f[3]);
    t.d_plus_kW = parse_number(f[4]);
    t.d_minus_kW = parse_number(f[5]);
    t.regenerated_kW = parse_number(f[6]);
    t.departure_demand_kW = parse_number(f[7]);
    trace.ticks.push_back(std::move(t));
  }
  if (trace.ticks.size() >= 2) {
    trace.tick_s = trace.ticks[1].time_s - trace.ticks[0].time_s;
  }
  if (!trace.ticks.empty()) trace.sim_duration_s = trace.ticks.back().time_s;

  if (!std::getline(summary_csv, line)) {
    throw std::invalid_argument("train summary CSV is empty");
  }
  while (std::getline(summary_csv, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw std::invalid_argument("bad summary row: " + line);
    TrainSummary s;
    s.train_id = parse_int(f[0]);
    s.launch_s = parse_number(f[1]);
    if (!f[2].empty()) {
      s.complete_s = parse_number(f[2]);
      s.scheduled_completion_s = *s.complete_s - parse_number(f[4]);
    }
    trace.trains.push_back(std::move(s));
  }
  return trace;
}

std::string policy_stats_json(const PolicyStats& stats,
                              double reporting_threshold_kW) {
  nlohmann::ordered_json root;
  root["reporting_threshold_kW"] = reporting_threshold_kW;
  root[stats.policy] = stats_to_json(stats);
  return root.dump(2) + "\n";
}

std::string report_json(const ComparisonReport& r) {
  nlohmann::ordered_json root;
  root["reporting_threshold_kW"] = r.reporting_threshold_kW;
  root["fixed"] = stats_to_json(r.fixed);
  root["pres"] = stats_to_json(r.pres);
  root["comparison"] = {{"exceedance_reduction_pct", r.exceedance_reduction_pct},
                        {"extra_delay_mean_s", r.extra_delay_mean_s},
                        {"extra_delay_pct", r.extra_delay_pct}};
  return root.dump(2) + "\n";
}

std::string report_csv(const ComparisonReport& r) {
  std::vector<std::pair<std::string, std::string>> cols;
  cols.emplace_back("reporting_threshold_kW",
                    format_number(r.reporting_threshold_kW));
  for (const PolicyStats* s : {&r.fixed, &r.pres}) {
    const std::string p = s == &r.fixed ? "fixed_" : "pres_";
    cols.emplace_back(p + "exceedance_count",
                      std::to_string(s->exceedance_count));
    cols.emplace_back(p + "exceedance_tick_count",
                      std::to_string(s->exceedance_tick_count));
    cols.emplace_back(p + "max_total_power_kW",
                      format_number(s->max_total_power_kW));
    cols.emplace_back(p + "mean_power_kW", format_number(s->mean_power_kW));
    cols.emplace_back(p + "energy_kWh", format_number(s->energy_kWh));
    cols.emplace_back(p + "regen_utilized_kWh",
                      format_number(s->regen_utilized_kWh));
    cols.emplace_back(p + "regen_wasted_kWh",
                      format_number(s->regen_wasted_kWh));
    cols.emplace_back(p + "travel_time_mean_s",
                      format_number(s->travel_time_mean_s));
    cols.emplace_back(p + "travel_time_std_s",
                      format_number(s->travel_time_std_s));
    cols.emplace_back(p + "travel_time_q1_s",
                      format_number(s->travel_time_quartiles_s[0]));
    cols.emplace_back(p + "travel_time_median_s",
                      format_number(s->travel_time_quartiles_s[1]));
    cols.emplace_back(p + "travel_time_q3_s",
                      format_number(s->travel_time_quartiles_s[2]));
    cols.emplace_back(p + "completed_train_count",
                      std::to_string(s->completed_train_count));
    cols.emplace_back(p + "launched_train_count",
                      std::to_string(s->launched_train_count));
  }
  cols.emplace_back("exceedance_reduction_pct",
                    format_number(r.exceedance_reduction_pct));
  cols.emplace_back("extra_delay_mean_s", format_number(r.extra_delay_mean_s));
  cols.emplace_back("extra_delay_pct", format_number(r.extra_delay_pct));

  std::string header, values;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    header += (i ? "," : "") + cols[i].first;
    values += (i ? "," : "") + cols[i].second;
  }
  return header + "\n" + values + "\n";
}

}  // namespace metro
