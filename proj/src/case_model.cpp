// Copyright 2026 The caesuc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "caesuc/case_model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "caesuc/util.hpp"

namespace caesuc {

int GridCase::bus_index(const std::string& bus_name) const {
  for (size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].name == bus_name) return static_cast<int>(i);
  }
  return -1;
}

int GridCase::incidence(int bus, const Line& line) const {
  if (bus == line.from) return -1;
  if (bus == line.to) return 1;
  return 0;
}

// ---------------------------------------------------------------------------
// Schema

const std::vector<SchemaField>& case_schema() {
  static const std::vector<SchemaField> kSchema = {
      {"buses", "bus", "name", "id", true},
      {"lines", "line", "name", "id", true},
      {"lines", "line", "from", "busref", true},
      {"lines", "line", "to", "busref", true},
      {"lines", "line", "susceptance", "num+", true},
      {"lines", "line", "capacity", "num+", true},
      {"generators", "gen", "name", "id", true},
      {"generators", "gen", "bus", "busref", true},
      {"generators", "gen", "pmin", "num0+", true},
      {"generators", "gen", "pmax", "num+", true},
      {"generators", "gen", "cost_energy", "num0+", true},
      {"generators", "gen", "cost_fixed", "num0+", false},
      {"generators", "gen", "cost_startup", "num0+", false},
      {"generators", "gen", "cost_shutdown", "num0+", false},
      {"generators", "gen", "cost_ramp_up", "num0+", false},
      {"generators", "gen", "cost_ramp_down", "num0+", false},
      {"generators", "gen", "ramp_up", "num0+", false},
      {"generators", "gen", "ramp_down", "num0+", false},
      {"generators", "gen", "min_up", "int+", false},
      {"generators", "gen", "min_down", "int+", false},
      {"generators", "gen", "init_on", "bool", false},
      {"generators", "gen", "init_hours", "int0+", false},
      {"wind", "wind", "name", "id", true},
      {"wind", "wind", "bus", "busref", true},
      {"wind", "wind", "capacity", "num+", true},
      {"caes", "caes", "name", "id", true},
      {"caes", "caes", "bus", "busref", true},
      {"caes", "caes", "volume", "num+", true},
      {"caes", "caes", "wall_area", "num+", true},
      {"caes", "caes", "heat_coeff", "num0+", true},
      {"caes", "caes", "wall_temp", "num+", true},
      {"caes", "caes", "inject_temp", "num+", true},
      {"caes", "caes", "inject_pressure", "num+", true},
      {"caes", "caes", "cv", "num+", true},
      {"caes", "caes", "gas_constant", "num+", true},
      {"caes", "caes", "kappa", "num+", false},
      {"caes", "caes", "mass_avg", "num+", true},
      {"caes", "caes", "pressure_min", "num+", true},
      {"caes", "caes", "pressure_max", "num+", true},
      {"caes", "caes", "temp_min", "num+", true},
      {"caes", "caes", "temp_max", "num+", true},
      {"caes", "caes", "flow_per_mw_in", "num+", true},
      {"caes", "caes", "flow_per_mw_out", "num+", true},
      {"caes", "caes", "charge_min", "num+", true},
      {"caes", "caes", "charge_max", "num+", true},
      {"caes", "caes", "discharge_min", "num+", true},
      {"caes", "caes", "discharge_max", "num+", true},
      {"caes", "caes", "temp_const", "num+", false},
      {"caes", "caes", "switch_intervals", "int0+", false},
      {"caes", "caes", "init_mass", "num+", true},
      {"caes", "caes", "init_temp", "num+", true},
      {"caes", "caes", "init_pressure", "num+", true},
      {"loads", "load", "name", "busref", true},
      {"loads", "load", "scenario", "int+", false},
      {"loads", "load", "profile", "list", true},
      {"scenarios", "_", "periods", "int+", true},
      {"scenarios", "_", "step_minutes", "num+", true},
      {"scenarios", "_", "steps_per_hour", "int+", false},
      {"scenarios", "_", "count", "int+", false},
      {"scenarios", "_", "probabilities", "list", false},
      {"scenarios", "_", "reserve_mw", "num0+", false},
      {"scenarios", "_", "reserve_profile", "list", false},
      {"scenarios", "windprofile", "name", "windref", true},
      {"scenarios", "windprofile", "scenario", "int+", true},
      {"scenarios", "windprofile", "profile", "list", true},
      {"costs", "_", "wind_shed", "num0+", false},
      {"costs", "_", "charge", "num0+", false},
      {"costs", "_", "discharge", "num0+", false},
      {"costs", "_", "reserve", "num0+", false},
      {"costs", "_", "load_shed", "num0+", false},
  };
  return kSchema;
}

std::string render_case_schema() {
  std::ostringstream os;
  os << "# caesuc case-file schema, version 1\n";
  os << "# columns: section record field type required\n";
  os << "# record \"_\" marks scalar `key = value` settings of the section;\n";
  os << "# all other records are lines of the form `name key=value ...`.\n";
  for (const SchemaField& f : case_schema()) {
    os << f.section << ' ' << f.record << ' ' << f.field << ' ' << f.type
       << ' ' << (f.required ? "required" : "optional") << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct LogicalLine {
  int number = 0;  // first physical line
  std::string text;
};

[[noreturn]] void parse_fail(const std::string& name, int line,
                             const std::string& message) {
  fail(ErrorKind::kIo, name + ":" + std::to_string(line) + ": " + message);
}

std::vector<LogicalLine> logical_lines(const std::string& text,
                                       const std::string& name) {
  std::vector<LogicalLine> out;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    if (size_t pos = raw.find('#'); pos != std::string::npos) raw.erase(pos);
    const bool continuation = !raw.empty() && (raw[0] == ' ' || raw[0] == '\t');
    std::string body(trim(raw));
    if (body.empty()) continue;
    if (continuation) {
      if (out.empty()) parse_fail(name, lineno, "continuation with nothing to continue");
      std::string& prev = out.back().text;
      // Lists split after a comma are glued back without a separator.
      if (!prev.empty() && prev.back() == ',') {
        prev += body;
      } else {
        prev += ' ';
        prev += body;
      }
    } else {
      out.push_back({lineno, std::move(body)});
    }
  }
  return out;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

// `key = rest-of-line` (value may contain spaces, e.g. probability lists).
bool match_setting(const std::string& line, std::string* key, std::string* value) {
  size_t eq = line.find('=');
  if (eq == std::string::npos) return false;
  std::string_view lhs = trim(std::string_view(line).substr(0, eq));
  if (!is_identifier(lhs)) return false;
  *key = std::string(lhs);
  *value = std::string(trim(std::string_view(line).substr(eq + 1)));
  return true;
}

struct Record {
  int line = 0;
  std::string name;
  std::map<std::string, std::string> fields;
};

Record parse_record(const LogicalLine& ll, const std::string& src) {
  Record rec;
  rec.line = ll.number;
  const std::vector<std::string> tokens = split_ws(ll.text);
  if (tokens.empty()) parse_fail(src, ll.number, "empty record");
  if (tokens[0].find('=') != std::string::npos) {
    parse_fail(src, ll.number, "expected a record name before key=value fields");
  }
  rec.name = tokens[0];
  for (size_t i = 1; i < tokens.size(); ++i) {
    size_t eq = tokens[i].find('=');
    if (eq == std::string::npos) {
      parse_fail(src, ll.number, "field '" + tokens[i] + "' is not key=value");
    }
    std::string key = tokens[i].substr(0, eq);
    std::string value = tokens[i].substr(eq + 1);
    if (!rec.fields.emplace(key, value).second) {
      parse_fail(src, ll.number, "duplicate field '" + key + "'");
    }
  }
  return rec;
}

class FieldReader {
 public:
  FieldReader(const Record& rec, const std::string& section,
              const std::string& record_kind, const std::string& src)
      : rec_(rec), section_(section), kind_(record_kind), src_(src) {
    for (const SchemaField& f : case_schema()) {
      if (section_ == f.section && kind_ == f.record &&
          std::string_view(f.field) != "name") {
        known_.insert(f.field);
        if (f.required) required_.insert(f.field);
      }
    }
    for (const auto& [key, value] : rec_.fields) {
      (void)value;
      if (!known_.count(key)) {
        parse_fail(src_, rec_.line,
                   "unknown field '" + key + "' in [" + section_ + "] record '" +
                       rec_.name + "'");
      }
    }
  }

  bool has(const std::string& field) const { return rec_.fields.count(field) > 0; }

  std::string raw(const std::string& field) const {
    auto it = rec_.fields.find(field);
    if (it == rec_.fields.end()) {
      parse_fail(src_, rec_.line, "missing required field '" + field + "' in [" +
                                      section_ + "] record '" + rec_.name + "'");
    }
    seen_.insert(field);
    return it->second;
  }

  double num(const std::string& field) {
    return parse_double(raw(field), where(field));
  }
  double num(const std::string& field, double fallback) {
    if (!has(field)) return fallback;
    return num(field);
  }
  long long integer(const std::string& field, long long fallback) {
    if (!has(field)) return fallback;
    return parse_int(raw(field), where(field));
  }
  bool flag(const std::string& field, bool fallback) {
    if (!has(field)) return fallback;
    const std::string v = raw(field);
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    parse_fail(src_, rec_.line, where(field) + ": not a boolean: '" + v + "'");
  }
  std::vector<double> list(const std::string& field) {
    std::vector<double> out;
    for (const std::string& item : split(raw(field), ',')) {
      out.push_back(parse_double(item, where(field)));
    }
    return out;
  }

  void finish() const {
    for (const std::string& field : required_) {
      if (!rec_.fields.count(field)) {
        parse_fail(src_, rec_.line, "missing required field '" + field +
                                        "' in [" + section_ + "] record '" +
                                        rec_.name + "'");
      }
    }
  }

  std::string where(const std::string& field) const {
    return src_ + ":" + std::to_string(rec_.line) + ": [" + section_ + "] " +
           rec_.name + "." + field;
  }

 private:
  const Record& rec_;
  std::string section_, kind_, src_;
  std::set<std::string> known_, required_;
  mutable std::set<std::string> seen_;
};

struct RawLoad {
  int line;
  std::string bus;
  int scenario;  // 0 = all
  std::vector<double> profile;
};

struct RawWindProfile {
  int line;
  std::string farm;
  int scenario;  // 1-based
  std::vector<double> profile;
};

}  // namespace

CaseBundle load_case_text(const std::string& text, const std::string& name) {
  CaseBundle bundle;
  GridCase& grid = bundle.grid;
  ScenarioSet& scen = bundle.scenarios;
  grid.name = name;

  static const std::set<std::string> kSections = {
      "buses", "lines", "generators", "wind", "caes", "loads", "scenarios", "costs"};
  std::set<std::string> seen_sections;

  std::string section;
  std::vector<RawLoad> raw_loads;
  std::vector<RawWindProfile> raw_wind;
  std::map<std::string, std::string> scen_settings, cost_settings;
  std::map<std::string, int> scen_setting_lines, cost_setting_lines;
  std::map<std::string, std::string> line_from, line_to;  // resolved later
  std::map<std::string, std::string> unit_bus;            // gen/wind/caes -> bus name
  std::set<std::string> record_names;  // per-section duplicate detection

  for (const LogicalLine& ll : logical_lines(text, name)) {
    if (ll.text.front() == '[') {
      if (ll.text.back() != ']') parse_fail(name, ll.number, "malformed section header");
      section = ll.text.substr(1, ll.text.size() - 2);
      if (!kSections.count(section)) {
        parse_fail(name, ll.number, "unknown section [" + section + "]");
      }
      if (!seen_sections.insert(section).second) {
        parse_fail(name, ll.number, "duplicate section [" + section + "]");
      }
      record_names.clear();
      continue;
    }
    if (section.empty()) parse_fail(name, ll.number, "content before first section");

    std::string key, value;
    const bool is_setting = match_setting(ll.text, &key, &value);

    if (section == "scenarios" && is_setting) {
      if (!scen_settings.emplace(key, value).second) {
        parse_fail(name, ll.number, "duplicate setting '" + key + "'");
      }
      scen_setting_lines[key] = ll.number;
      continue;
    }
    if (section == "costs") {
      if (!is_setting) parse_fail(name, ll.number, "[costs] takes `key = value` settings only");
      if (!cost_settings.emplace(key, value).second) {
        parse_fail(name, ll.number, "duplicate setting '" + key + "'");
      }
      cost_setting_lines[key] = ll.number;
      continue;
    }

    if (section == "buses") {
      const auto tokens = split_ws(ll.text);
      if (tokens.size() != 1 || !is_identifier(tokens[0])) {
        parse_fail(name, ll.number, "[buses] takes one bus name per line");
      }
      if (!record_names.insert(tokens[0]).second) {
        parse_fail(name, ll.number, "duplicate bus '" + tokens[0] + "'");
      }
      grid.buses.push_back({tokens[0]});
      continue;
    }

    Record rec = parse_record(ll, name);
    if (!record_names.insert(section + "/" + rec.name +
                             (rec.fields.count("scenario") ? "@" + rec.fields["scenario"] : ""))
             .second) {
      parse_fail(name, ll.number, "duplicate record '" + rec.name + "'");
    }

    if (section == "lines") {
      FieldReader r(rec, "lines", "line", name);
      Line line;
      line.name = rec.name;
      line_from[rec.name] = r.raw("from");
      line_to[rec.name] = r.raw("to");
      line.susceptance = r.num("susceptance");
      line.capacity = r.num("capacity");
      r.finish();
      grid.lines.push_back(line);
    } else if (section == "generators") {
      FieldReader r(rec, "generators", "gen", name);
      Generator g;
      g.name = rec.name;
      unit_bus["g/" + rec.name] = r.raw("bus");
      g.pmin = r.num("pmin");
      g.pmax = r.num("pmax");
      g.cost_energy = r.num("cost_energy");
      g.cost_fixed = r.num("cost_fixed", 0);
      g.cost_startup = r.num("cost_startup", 0);
      g.cost_shutdown = r.num("cost_shutdown", 0);
      g.cost_ramp_up = r.num("cost_ramp_up", 0);
      g.cost_ramp_down = r.num("cost_ramp_down", 0);
      g.ramp_up = r.num("ramp_up", g.pmax);
      g.ramp_down = r.num("ramp_down", g.pmax);
      g.min_up = static_cast<int>(r.integer("min_up", 1));
      g.min_down = static_cast<int>(r.integer("min_down", 1));
      g.init_on = r.flag("init_on", false);
      g.init_hours = static_cast<int>(r.integer("init_hours", 1000));
      r.finish();
      grid.generators.push_back(g);
    } else if (section == "wind") {
      FieldReader r(rec, "wind", "wind", name);
      WindFarm w;
      w.name = rec.name;
      unit_bus["w/" + rec.name] = r.raw("bus");
      w.capacity = r.num("capacity");
      r.finish();
      grid.wind_farms.push_back(w);
    } else if (section == "caes") {
      FieldReader r(rec, "caes", "caes", name);
      CaesUnit u;
      u.name = rec.name;
      unit_bus["c/" + rec.name] = r.raw("bus");
      cavern::CavernParams& p = u.params;
      p.volume = r.num("volume");
      p.wall_area = r.num("wall_area");
      p.heat_coeff = r.num("heat_coeff");
      p.wall_temp = r.num("wall_temp");
      p.inject_temp = r.num("inject_temp");
      p.inject_pressure = r.num("inject_pressure");
      p.cv = r.num("cv");
      p.gas_constant = r.num("gas_constant");
      p.kappa = r.num("kappa", 1.4);
      p.mass_avg = r.num("mass_avg");
      p.pressure_min = r.num("pressure_min");
      p.pressure_max = r.num("pressure_max");
      p.temp_min = r.num("temp_min");
      p.temp_max = r.num("temp_max");
      p.flow_per_mw_in = r.num("flow_per_mw_in");
      p.flow_per_mw_out = r.num("flow_per_mw_out");
      p.charge_min = r.num("charge_min");
      p.charge_max = r.num("charge_max");
      p.discharge_min = r.num("discharge_min");
      p.discharge_max = r.num("discharge_max");
      p.temp_const = r.num("temp_const", p.wall_temp);
      p.switch_intervals = static_cast<int>(r.integer("switch_intervals", 1));
      u.initial.mass = r.num("init_mass");
      u.initial.temp = r.num("init_temp");
      u.initial.pres = r.num("init_pressure");
      r.finish();
      grid.caes_units.push_back(u);
    } else if (section == "loads") {
      FieldReader r(rec, "loads", "load", name);
      RawLoad rl;
      rl.line = ll.number;
      rl.bus = rec.name;
      rl.scenario = static_cast<int>(r.integer("scenario", 0));
      rl.profile = r.list("profile");
      r.finish();
      raw_loads.push_back(std::move(rl));
    } else if (section == "scenarios") {
      FieldReader r(rec, "scenarios", "windprofile", name);
      RawWindProfile rw;
      rw.line = ll.number;
      rw.farm = rec.name;
      rw.scenario = static_cast<int>(r.integer("scenario", 0));
      rw.profile = r.list("profile");
      r.finish();
      raw_wind.push_back(std::move(rw));
    } else {
      parse_fail(name, ll.number, "records not allowed in [" + section + "]");
    }
  }

  // Scenario settings.
  auto scen_setting = [&](const std::string& key) -> const std::string* {
    auto it = scen_settings.find(key);
    return it == scen_settings.end() ? nullptr : &it->second;
  };
  for (const auto& [key, value] : scen_settings) {
    (void)value;
    static const std::set<std::string> kKnown = {
        "periods", "step_minutes", "steps_per_hour", "count",
        "probabilities", "reserve_mw", "reserve_profile"};
    if (!kKnown.count(key)) {
      parse_fail(name, scen_setting_lines[key], "unknown setting '" + key + "' in [scenarios]");
    }
  }
  if (!scen_setting("periods")) {
    fail(ErrorKind::kIo, name + ": [scenarios] must set `periods`");
  }
  if (!scen_setting("step_minutes")) {
    fail(ErrorKind::kIo, name + ": [scenarios] must set `step_minutes`");
  }
  scen.n_t = static_cast<int>(parse_int(*scen_setting("periods"), name + ": periods"));
  scen.step_seconds = 60.0 * parse_double(*scen_setting("step_minutes"), name + ": step_minutes");
  scen.steps_per_hour = scen_setting("steps_per_hour")
      ? static_cast<int>(parse_int(*scen_setting("steps_per_hour"), name + ": steps_per_hour"))
      : 1;
  scen.num_scenarios = scen_setting("count")
      ? static_cast<int>(parse_int(*scen_setting("count"), name + ": count"))
      : 1;
  if (scen.n_t < 1 || scen.num_scenarios < 1) {
    fail(ErrorKind::kIo, name + ": periods and count must be at least 1");
  }

  std::vector<double> probs;
  if (scen_setting("probabilities")) {
    for (const std::string& item : split(*scen_setting("probabilities"), ',')) {
      probs.push_back(parse_double(item, name + ": probabilities"));
    }
  } else {
    probs.assign(scen.num_scenarios, 1.0 / scen.num_scenarios);
  }
  scen.probability.assign(scen.n_t, probs);

  scen.reserve.assign(scen.n_t, -1.0);
  if (scen_setting("reserve_profile")) {
    std::vector<double> rp;
    for (const std::string& item : split(*scen_setting("reserve_profile"), ',')) {
      rp.push_back(parse_double(item, name + ": reserve_profile"));
    }
    scen.reserve = rp;
  } else if (scen_setting("reserve_mw")) {
    const double r = parse_double(*scen_setting("reserve_mw"), name + ": reserve_mw");
    scen.reserve.assign(scen.n_t, r);
  } else {
    // Default requirement: capacity of the largest unit.
    double largest = 0;
    for (const Generator& g : grid.generators) largest = std::max(largest, g.pmax);
    scen.reserve.assign(scen.n_t, largest);
  }

  // Cost settings.
  for (const auto& [key, value] : cost_settings) {
    const std::string ctx = name + ": [costs] " + key;
    if (key == "wind_shed") scen.costs.wind_shed = parse_double(value, ctx);
    else if (key == "charge") scen.costs.charge = parse_double(value, ctx);
    else if (key == "discharge") scen.costs.discharge = parse_double(value, ctx);
    else if (key == "reserve") scen.costs.reserve = parse_double(value, ctx);
    else if (key == "load_shed") scen.costs.load_shed = parse_double(value, ctx);
    else parse_fail(name, cost_setting_lines[key], "unknown setting '" + key + "' in [costs]");
  }

  // Resolve bus references.
  auto resolve_bus = [&](const std::string& bus_name, const std::string& what) {
    int idx = grid.bus_index(bus_name);
    if (idx < 0) {
      fail(ErrorKind::kValidation,
           name + ": " + what + " references unknown bus '" + bus_name + "'");
    }
    return idx;
  };
  for (Line& l : grid.lines) {
    l.from = resolve_bus(line_from[l.name], "line " + l.name);
    l.to = resolve_bus(line_to[l.name], "line " + l.name);
  }
  for (Generator& g : grid.generators) {
    g.bus = resolve_bus(unit_bus["g/" + g.name], "generator " + g.name);
  }
  for (WindFarm& w : grid.wind_farms) {
    w.bus = resolve_bus(unit_bus["w/" + w.name], "wind farm " + w.name);
  }
  for (CaesUnit& u : grid.caes_units) {
    u.bus = resolve_bus(unit_bus["c/" + u.name], "caes unit " + u.name);
    u.params.dt = scen.step_seconds;  // single source of truth: the scenario grid
  }

  // Load series: default zero, `scenario=` records override one scenario.
  scen.load.assign(scen.num_scenarios,
                   std::vector<std::vector<double>>(
                       grid.buses.size(), std::vector<double>(scen.n_t, 0.0)));
  for (const RawLoad& rl : raw_loads) {
    const int b = resolve_bus(rl.bus, "load record");
    if (static_cast<int>(rl.profile.size()) != scen.n_t) {
      parse_fail(name, rl.line,
                 "load profile for bus '" + rl.bus + "' has " +
                     std::to_string(rl.profile.size()) + " values, expected " +
                     std::to_string(scen.n_t));
    }
    if (rl.scenario == 0) {
      for (int j = 0; j < scen.num_scenarios; ++j) {
        for (int t = 0; t < scen.n_t; ++t) scen.load[j][b][t] = rl.profile[t];
      }
    } else {
      if (rl.scenario > scen.num_scenarios) {
        parse_fail(name, rl.line, "load scenario index out of range");
      }
      for (int t = 0; t < scen.n_t; ++t) scen.load[rl.scenario - 1][b][t] = rl.profile[t];
    }
  }

  // Wind availability series, required per farm and scenario.
  scen.wind_max.assign(scen.num_scenarios,
                       std::vector<std::vector<double>>(
                           grid.wind_farms.size(),
                           std::vector<double>(scen.n_t, -1.0)));
  for (const RawWindProfile& rw : raw_wind) {
    int farm = -1;
    for (size_t i = 0; i < grid.wind_farms.size(); ++i) {
      if (grid.wind_farms[i].name == rw.farm) farm = static_cast<int>(i);
    }
    if (farm < 0) {
      parse_fail(name, rw.line, "wind profile references unknown farm '" + rw.farm + "'");
    }
    if (rw.scenario < 1 || rw.scenario > scen.num_scenarios) {
      parse_fail(name, rw.line, "wind profile scenario index out of range");
    }
    if (static_cast<int>(rw.profile.size()) != scen.n_t) {
      parse_fail(name, rw.line,
                 "wind profile for '" + rw.farm + "' has " +
                     std::to_string(rw.profile.size()) + " values, expected " +
                     std::to_string(scen.n_t));
    }
    scen.wind_max[rw.scenario - 1][farm] = rw.profile;
  }

  const std::vector<Violation> violations = validate(grid, scen);
  if (!violations.empty()) {
    std::string msg = name + ": case is invalid:";
    for (const Violation& v : violations) {
      msg += "\n  [" + v.where + "] " + v.message;
    }
    fail(ErrorKind::kValidation, msg);
  }
  return bundle;
}

CaseBundle load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open case file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_case_text(ss.str(), std::filesystem::path(path).stem().string());
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void check_nonneg(std::vector<Violation>& out, const std::string& where,
                  const char* what, double v) {
  if (v < 0) {
    out.push_back({where, std::string(what) + " must be non-negative, got " + format_double(v)});
  }
}

}  // namespace

std::vector<Violation> validate(const GridCase& grid, const ScenarioSet& scen) {
  std::vector<Violation> out;

  if (grid.buses.empty()) out.push_back({"buses", "at least one bus is required"});

  for (const Line& l : grid.lines) {
    const std::string where = "lines " + l.name;
    if (l.from < 0 || l.from >= static_cast<int>(grid.buses.size()) ||
        l.to < 0 || l.to >= static_cast<int>(grid.buses.size())) {
      out.push_back({where, "endpoint references a missing bus"});
      continue;
    }
    if (l.from == l.to) out.push_back({where, "line endpoints must differ"});
    if (!(l.susceptance > 0)) out.push_back({where, "susceptance must be positive"});
    if (!(l.capacity > 0)) out.push_back({where, "capacity must be positive"});
  }

  for (const Generator& g : grid.generators) {
    const std::string where = "generators " + g.name;
    if (g.bus < 0 || g.bus >= static_cast<int>(grid.buses.size())) {
      out.push_back({where, "references a missing bus"});
    }
    if (!(g.pmin >= 0)) out.push_back({where, "pmin must be non-negative"});
    if (!(g.pmin <= g.pmax)) out.push_back({where, "pmin must not exceed pmax"});
    check_nonneg(out, where, "cost_energy", g.cost_energy);
    check_nonneg(out, where, "cost_fixed", g.cost_fixed);
    check_nonneg(out, where, "cost_startup", g.cost_startup);
    check_nonneg(out, where, "cost_shutdown", g.cost_shutdown);
    check_nonneg(out, where, "cost_ramp_up", g.cost_ramp_up);
    check_nonneg(out, where, "cost_ramp_down", g.cost_ramp_down);
    check_nonneg(out, where, "ramp_up", g.ramp_up);
    check_nonneg(out, where, "ramp_down", g.ramp_down);
    if (g.min_up < 1) out.push_back({where, "min_up must be at least 1 hour"});
    if (g.min_down < 1) out.push_back({where, "min_down must be at least 1 hour"});
    if (g.init_hours < 0) out.push_back({where, "init_hours must be non-negative"});
  }

  for (const WindFarm& w : grid.wind_farms) {
    const std::string where = "wind " + w.name;
    if (w.bus < 0 || w.bus >= static_cast<int>(grid.buses.size())) {
      out.push_back({where, "references a missing bus"});
    }
    if (!(w.capacity > 0)) out.push_back({where, "capacity must be positive"});
  }

  for (const CaesUnit& u : grid.caes_units) {
    const std::string where = "caes " + u.name;
    if (u.bus < 0 || u.bus >= static_cast<int>(grid.buses.size())) {
      out.push_back({where, "references a missing bus"});
    }
    try {
      u.params.check();
    } catch (const Error& e) {
      // check() already names the field; most importantly charge_min and
      // discharge_min must be positive or the idle-indicator constraint in
      // the scheduling model degenerates.
      out.push_back({where, e.what()});
    }
    if (!(u.initial.mass > 0)) out.push_back({where, "init_mass must be positive"});
    if (!(u.initial.temp > 0)) out.push_back({where, "init_temp must be positive"});
    if (!(u.initial.pres > 0)) out.push_back({where, "init_pressure must be positive"});
    if (u.initial.pres < u.params.pressure_min || u.initial.pres > u.params.pressure_max) {
      out.push_back({where, "init_pressure lies outside the operating window"});
    }
    if (u.initial.temp < u.params.temp_min || u.initial.temp > u.params.temp_max) {
      out.push_back({where, "init_temp lies outside the temperature band"});
    }
  }

  // Scenario structure.
  if (scen.n_t < 1) out.push_back({"scenarios", "periods must be at least 1"});
  if (scen.steps_per_hour < 1) {
    out.push_back({"scenarios", "steps_per_hour must be at least 1"});
  } else if (scen.n_t % scen.steps_per_hour != 0) {
    out.push_back({"scenarios", "periods must be a whole number of commitment hours"});
  }
  if (!(scen.step_seconds > 0)) out.push_back({"scenarios", "step_minutes must be positive"});

  if (static_cast<int>(scen.probability.size()) != scen.n_t) {
    out.push_back({"scenarios", "probability table must cover every period"});
  } else {
    for (int t = 0; t < scen.n_t; ++t) {
      if (static_cast<int>(scen.probability[t].size()) != scen.num_scenarios) {
        out.push_back({"scenarios", "period " + std::to_string(t) +
                                        ": probability count differs from scenario count"});
        continue;
      }
      double sum = 0;
      for (double p : scen.probability[t]) {
        if (!(p > 0)) {
          out.push_back({"scenarios", "period " + std::to_string(t) +
                                          ": probabilities must be positive"});
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        out.push_back({"scenarios", "period " + std::to_string(t) +
                                        ": probabilities sum to " + format_double(sum) +
                                        ", expected 1"});
      }
    }
  }

  if (static_cast<int>(scen.load.size()) != scen.num_scenarios) {
    out.push_back({"loads", "load table must cover every scenario"});
  } else {
    for (int j = 0; j < scen.num_scenarios; ++j) {
      if (scen.load[j].size() != grid.buses.size()) {
        out.push_back({"loads", "scenario " + std::to_string(j + 1) +
                                    ": load table must cover every bus"});
        continue;
      }
      for (size_t b = 0; b < grid.buses.size(); ++b) {
        for (double d : scen.load[j][b]) {
          if (d < 0) {
            out.push_back({"loads", "bus " + grid.buses[b].name + " scenario " +
                                        std::to_string(j + 1) + ": negative load"});
            break;
          }
        }
      }
    }
  }

  if (static_cast<int>(scen.wind_max.size()) != scen.num_scenarios) {
    out.push_back({"scenarios", "wind table must cover every scenario"});
  } else {
    for (int j = 0; j < scen.num_scenarios; ++j) {
      for (size_t w = 0; w < grid.wind_farms.size(); ++w) {
        const auto& series = scen.wind_max[j][w];
        if (series.empty() || series[0] < 0) {
          out.push_back({"scenarios", "wind farm " + grid.wind_farms[w].name +
                                          ": missing profile for scenario " +
                                          std::to_string(j + 1)});
          continue;
        }
        for (double v : series) {
          if (v < 0) {
            out.push_back({"scenarios", "wind farm " + grid.wind_farms[w].name +
                                            " scenario " + std::to_string(j + 1) +
                                            ": negative availability"});
            break;
          }
        }
      }
    }
  }

  for (double r : scen.reserve) {
    if (r < 0) {
      out.push_back({"scenarios", "reserve requirement must be non-negative"});
      break;
    }
  }
  check_nonneg(out, "costs", "wind_shed", scen.costs.wind_shed);
  check_nonneg(out, "costs", "charge", scen.costs.charge);
  check_nonneg(out, "costs", "discharge", scen.costs.discharge);
  check_nonneg(out, "costs", "reserve", scen.costs.reserve);
  check_nonneg(out, "costs", "load_shed", scen.costs.load_shed);

  // Reserve coverage is a hard row in the scheduling model with no shedding
  // relief, so committable + wind + storage capacity must reach load plus
  // reserve in every period and scenario or no commitment is feasible.
  if (static_cast<int>(scen.load.size()) == scen.num_scenarios &&
      static_cast<int>(scen.wind_max.size()) == scen.num_scenarios &&
      static_cast<int>(scen.reserve.size()) == scen.n_t) {
    double committable = 0;
    for (const Generator& g : grid.generators) committable += g.pmax;
    for (const CaesUnit& u : grid.caes_units) committable += u.params.discharge_max;
    for (int j = 0; j < scen.num_scenarios; ++j) {
      if (scen.load[j].size() != grid.buses.size()) continue;
      for (int t = 0; t < scen.n_t; ++t) {
        double need = scen.reserve[t];
        for (size_t b = 0; b < grid.buses.size(); ++b) need += scen.load[j][b][t];
        double avail = committable;
        for (size_t w = 0; w < grid.wind_farms.size(); ++w) {
          const auto& series = scen.wind_max[j][w];
          if (static_cast<int>(series.size()) == scen.n_t && series[t] > 0) {
            avail += series[t];
          }
        }
        if (avail + 1e-9 < need) {
          out.push_back({"generators",
                         "period " + std::to_string(t) + " scenario " +
                             std::to_string(j + 1) + ": available capacity " +
                             format_double(avail) +
                             " MW cannot cover load plus reserve " +
                             format_double(need) + " MW"});
          j = scen.num_scenarios;  // one report is enough
          break;
        }
      }
    }
  }

  return out;
}

// ---------------------------------------------------------------------------
// Serialization

std::string serialize_case(const CaseBundle& bundle) {
  const GridCase& grid = bundle.grid;
  const ScenarioSet& scen = bundle.scenarios;
  std::ostringstream os;
  auto list = [](const std::vector<double>& values) {
    std::string s;
    for (size_t i = 0; i < values.size(); ++i) {
      if (i) s += ',';
      s += format_double(values[i]);
    }
    return s;
  };

  os << "[buses]\n";
  for (const Bus& b : grid.buses) os << b.name << '\n';

  os << "\n[lines]\n";
  for (const Line& l : grid.lines) {
    os << l.name << " from=" << grid.buses[l.from].name
       << " to=" << grid.buses[l.to].name
       << " susceptance=" << format_double(l.susceptance)
       << " capacity=" << format_double(l.capacity) << '\n';
  }

  os << "\n[generators]\n";
  for (const Generator& g : grid.generators) {
    os << g.name << " bus=" << grid.buses[g.bus].name
       << " pmin=" << format_double(g.pmin) << " pmax=" << format_double(g.pmax)
       << " cost_energy=" << format_double(g.cost_energy)
       << " cost_fixed=" << format_double(g.cost_fixed)
       << " cost_startup=" << format_double(g.cost_startup)
       << " cost_shutdown=" << format_double(g.cost_shutdown)
       << " cost_ramp_up=" << format_double(g.cost_ramp_up)
       << " cost_ramp_down=" << format_double(g.cost_ramp_down)
       << " ramp_up=" << format_double(g.ramp_up)
       << " ramp_down=" << format_double(g.ramp_down)
       << " min_up=" << g.min_up << " min_down=" << g.min_down
       << " init_on=" << (g.init_on ? 1 : 0)
       << " init_hours=" << g.init_hours << '\n';
  }

  if (!grid.wind_farms.empty()) {
    os << "\n[wind]\n";
    for (const WindFarm& w : grid.wind_farms) {
      os << w.name << " bus=" << grid.buses[w.bus].name
         << " capacity=" << format_double(w.capacity) << '\n';
    }
  }

  if (!grid.caes_units.empty()) {
    os << "\n[caes]\n";
    for (const CaesUnit& u : grid.caes_units) {
      const cavern::CavernParams& p = u.params;
      os << u.name << " bus=" << grid.buses[u.bus].name
         << " volume=" << format_double(p.volume)
         << " wall_area=" << format_double(p.wall_area)
         << " heat_coeff=" << format_double(p.heat_coeff)
         << " wall_temp=" << format_double(p.wall_temp)
         << " inject_temp=" << format_double(p.inject_temp)
         << " inject_pressure=" << format_double(p.inject_pressure)
         << " cv=" << format_double(p.cv)
         << " gas_constant=" << format_double(p.gas_constant)
         << " kappa=" << format_double(p.kappa)
         << " mass_avg=" << format_double(p.mass_avg)
         << " pressure_min=" << format_double(p.pressure_min)
         << " pressure_max=" << format_double(p.pressure_max)
         << " temp_min=" << format_double(p.temp_min)
         << " temp_max=" << format_double(p.temp_max)
         << " flow_per_mw_in=" << format_double(p.flow_per_mw_in)
         << " flow_per_mw_out=" << format_double(p.flow_per_mw_out)
         << " charge_min=" << format_double(p.charge_min)
         << " charge_max=" << format_double(p.charge_max)
         << " discharge_min=" << format_double(p.discharge_min)
         << " discharge_max=" << format_double(p.discharge_max)
         << " temp_const=" << format_double(p.temp_const)
         << " switch_intervals=" << p.switch_intervals
         << " init_mass=" << format_double(u.initial.mass)
         << " init_temp=" << format_double(u.initial.temp)
         << " init_pressure=" << format_double(u.initial.pres) << '\n';
    }
  }

  os << "\n[loads]\n";
  for (size_t b = 0; b < grid.buses.size(); ++b) {
    for (int j = 0; j < scen.num_scenarios; ++j) {
      os << grid.buses[b].name << " scenario=" << (j + 1)
         << " profile=" << list(scen.load[j][b]) << '\n';
    }
  }

  os << "\n[scenarios]\n";
  os << "periods = " << scen.n_t << '\n';
  os << "step_minutes = " << format_double(scen.step_seconds / 60.0) << '\n';
  os << "steps_per_hour = " << scen.steps_per_hour << '\n';
  os << "count = " << scen.num_scenarios << '\n';
  os << "probabilities = " << list(scen.probability.empty()
                                       ? std::vector<double>{}
                                       : scen.probability[0]) << '\n';
  os << "reserve_profile = " << list(scen.reserve) << '\n';
  for (size_t w = 0; w < grid.wind_farms.size(); ++w) {
    for (int j = 0; j < scen.num_scenarios; ++j) {
      os << grid.wind_farms[w].name << " scenario=" << (j + 1)
         << " profile=" << list(scen.wind_max[j][w]) << '\n';
    }
  }

  os << "\n[costs]\n";
  os << "wind_shed = " << format_double(scen.costs.wind_shed) << '\n';
  os << "charge = " << format_double(scen.costs.charge) << '\n';
  os << "discharge = " << format_double(scen.costs.discharge) << '\n';
  os << "reserve = " << format_double(scen.costs.reserve) << '\n';
  os << "load_shed = " << format_double(scen.costs.load_shed) << '\n';
  return os.str();
}

ScenarioSet scale_wind(const ScenarioSet& scenarios,
                       const std::vector<double>& multipliers) {
  if (static_cast<int>(multipliers.size()) != scenarios.num_scenarios) {
    fail(ErrorKind::kArgument,
         "scale_wind: got " + std::to_string(multipliers.size()) +
             " multipliers for " + std::to_string(scenarios.num_scenarios) +
             " scenarios");
  }
  for (double m : multipliers) {
    if (!(m > 0)) fail(ErrorKind::kArgument, "scale_wind: multipliers must be positive");
  }
  ScenarioSet out = scenarios;
  for (int j = 0; j < out.num_scenarios; ++j) {
    for (auto& series : out.wind_max[j]) {
      for (double& v : series) v *= multipliers[j];
    }
  }
  return out;
}

}  // namespace caesuc
