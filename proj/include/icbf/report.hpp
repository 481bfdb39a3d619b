#pragma once

#include <string>

#include "icbf/field_map.hpp"
#include "icbf/sim.hpp"

namespace icbf {

// Every file here is written to <path>.tmp and renamed into place, so partial
// writes never clobber a previous result. Doubles print as shortest-round-trip
// ("%.17g"), which makes re-runs byte-identical except for the step_ms column.

void write_csv(const TrajectoryLog& log, const std::string& path);

struct RunManifest {
  std::string scenario;
  std::string config_digest;
  std::string tool_version;
};

void write_summary_json(const TrajectoryLog& log, const RunManifest& manifest,
                        const std::string& path);

// Overhead map of the lambda_min field with the lambda_s level set, beacons,
// and the driven trajectory.
void write_svg_trajectory(const TrajectoryLog& log, const ScenarioConfig& cfg,
                          const FieldGrid& grid, const std::string& path);

// Time series of the raw, method, and lifted barrier values.
void write_svg_barriers(const TrajectoryLog& log, const ScenarioConfig& cfg,
                        const std::string& path);

// World rectangle covering beacons, start, goal, and trajectory, padded.
FieldBounds plot_bounds(const TrajectoryLog& log, const ScenarioConfig& cfg);

}  // namespace icbf
