#include "mbo/probes.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "mbo/errors.hpp"
#include "mbo/geometry.hpp"

namespace mbo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

int parse_phase(const std::string& text, const std::string& probe, int num_phases) {
  int value = -1;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 0 || value >= num_phases) {
    throw ConfigError(fmt::format("output.probes: '{}': phase '{}' is not in [0, {})", probe, text, num_phases));
  }
  return value;
}

std::string fmt_value(double v) { return std::isnan(v) ? std::string() : fmt::format("{:.12g}", v); }

}  // namespace

std::string Probe::to_string() const {
  switch (kind) {
    case Kind::Radius: return fmt::format("radius:{}", i);
    case Kind::Length: return fmt::format("length:{}:{}", i, j);
    case Kind::Junctions: return "junctions";
  }
  return {};
}

Probe parse_probe(const std::string& text, int num_phases) {
  const auto parts = split(text, ':');
  Probe p;
  if (parts[0] == "radius" && parts.size() == 2) {
    p.kind = Probe::Kind::Radius;
    p.i = parse_phase(parts[1], text, num_phases);
  } else if (parts[0] == "length" && parts.size() == 3) {
    p.kind = Probe::Kind::Length;
    p.i = parse_phase(parts[1], text, num_phases);
    p.j = parse_phase(parts[2], text, num_phases);
    if (p.i == p.j) throw ConfigError(fmt::format("output.probes: '{}': phases must differ", text));
  } else if (parts[0] == "junctions" && parts.size() == 1) {
    p.kind = Probe::Kind::Junctions;
  } else {
    throw ConfigError(fmt::format("output.probes: '{}': expected radius:P, length:I:J or junctions", text));
  }
  return p;
}

std::vector<ProbeRow> evaluate_probe(const Probe& probe, const LabelField& labels, std::int64_t step,
                                     const MaterialSpec& material) {
  std::vector<ProbeRow> rows;
  switch (probe.kind) {
    case Probe::Kind::Radius: {
      double r = 0.0;
      try {
        r = disk_radius(labels, probe.i);
      } catch (const EmptyPhase&) {
      }
      rows.push_back({probe.to_string(), step, r, kNaN, kNaN});
      break;
    }
    case Probe::Kind::Length: {
      const auto m = interface_length(labels, probe.i, probe.j);
      rows.push_back({probe.to_string(), step, m.length, kNaN, kNaN});
      break;
    }
    case Probe::Kind::Junctions: {
      if (labels.grid.dim != 2) break;
      const auto junctions = junction_angles(labels);
      for (std::size_t k = 0; k < junctions.size(); ++k) {
        const auto& jr = junctions[k];
        const auto [a, b, c] = jr.phases;
        std::array<double, 3> target{kNaN, kNaN, kNaN};
        try {
          target = young_angles(material.sigma(a, b), material.sigma(a, c), material.sigma(b, c)).angles;
        } catch (const InadmissibleTensions&) {
        }
        for (int s = 0; s < 3; ++s) {
          rows.push_back({fmt::format("junction[{}]:angle:{}", k, jr.phases[s]), step, jr.angles[s], target[s],
                          jr.angles[s] - target[s]});
        }
      }
      break;
    }
  }
  return rows;
}

std::string probe_csv_header() { return "kind,step,value,target,error"; }

std::string probe_csv_row(const ProbeRow& row) {
  return fmt::format("{},{},{},{},{}", row.kind, row.step, fmt_value(row.value), fmt_value(row.target),
                     fmt_value(row.error));
}

}  // namespace mbo
