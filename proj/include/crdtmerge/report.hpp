#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "crdtmerge/audit.hpp"
#include "crdtmerge/sim.hpp"
#include "crdtmerge/state.hpp"

namespace crdtmerge {

enum class Format { json, csv, table };

/// Parses "json", "csv" or "table"; throws ValueError otherwise.
Format parse_format(std::string_view name);

/// Audit report (phase1/phase2 style): one row per strategy with C, A, I,
/// Conv and compliance columns. JSON output is byte-deterministic for a
/// given input.
std::string render_audit(std::string_view command, const AuditConfig& cfg,
                         const std::vector<PropertyVerdict>& rows, Format format);

/// Per-ordering convergence report. Timing fields vary run to run; all
/// other fields are deterministic.
std::string render_convergence(const SimConfig& cfg, const std::vector<OrderingReport>& rows,
                               bool full_scale, Format format);

std::string render_partition(const SimConfig& cfg, const PartitionReport& rep, Format format);

std::string render_sweep(const SimConfig& cfg, const std::vector<SweepRow>& rows,
                         Format format);

std::string render_bench(const SimConfig& cfg, const std::vector<ScaleRow>& rows,
                         Format format);

/// Owner, entry counts, version vector, visible hashes and root of one
/// decoded state.
std::string render_state_summary(const MergeState& state, std::string_view file,
                                 Format format);

bool audit_all_pass(const std::vector<PropertyVerdict>& rows);
bool convergence_all_equal(const std::vector<OrderingReport>& rows);
bool sweep_all_converged(const std::vector<SweepRow>& rows);
bool bench_all_pass(const std::vector<ScaleRow>& rows);

} // namespace crdtmerge
