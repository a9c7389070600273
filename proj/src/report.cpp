#include "crdtmerge/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <utility>

#include <json.hpp>

#include "crdtmerge/errors.hpp"

namespace crdtmerge {

namespace {

using nlohmann::json;

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    return buf;
}

// Aligned two-space-gutter text table.
class TextTable {
public:
    explicit TextTable(std::vector<std::string> headers) : widths_(headers.size()) {
        add_row(std::move(headers));
    }

    void add_row(std::vector<std::string> cells) {
        for (std::size_t i = 0; i < cells.size() && i < widths_.size(); ++i) {
            widths_[i] = std::max(widths_[i], cells[i].size());
        }
        rows_.push_back(std::move(cells));
    }

    std::string str() const {
        std::string out;
        for (const auto& row : rows_) {
            std::string line;
            for (std::size_t i = 0; i < row.size(); ++i) {
                line += row[i];
                if (i + 1 < row.size()) {
                    line += std::string(widths_[i] - row[i].size() + 2, ' ');
                }
            }
            out += line;
            out += '\n';
        }
        return out;
    }

private:
    std::vector<std::size_t> widths_;
    std::vector<std::vector<std::string>> rows_;
};

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) {
        return value;
    }
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::string csv_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += csv_field(fields[i]);
    }
    out += '\n';
    return out;
}

json shape_json(const std::vector<std::size_t>& shape) {
    json arr = json::array();
    for (std::size_t dim : shape) {
        arr.push_back(dim);
    }
    return arr;
}

json audit_config_json(const AuditConfig& cfg, const std::vector<PropertyVerdict>& rows) {
    json strategies = json::array();
    for (const auto& row : rows) {
        strategies.push_back(row.strategy);
    }
    return {{"shape", shape_json(cfg.shape)}, {"seed", cfg.seed},         {"atol", cfg.atol},
            {"trials", cfg.trials},           {"repetitions", cfg.repetitions},
            {"strategies", strategies}};
}

json sim_config_json(const SimConfig& cfg) {
    return {{"nodes", cfg.nodes},
            {"shape", shape_json(cfg.shape)},
            {"strategy", cfg.strategy.id},
            {"seed", cfg.seed}};
}

std::string bool_word(bool v) {
    return v ? "true" : "false";
}

} // namespace

Format parse_format(std::string_view name) {
    if (name == "json") return Format::json;
    if (name == "csv") return Format::csv;
    if (name == "table") return Format::table;
    throw ValueError("unknown output format: " + std::string(name));
}

std::string render_audit(std::string_view command, const AuditConfig& cfg,
                         const std::vector<PropertyVerdict>& rows, Format format) {
    const std::size_t compliant = static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.crdt_compliant(); }));

    if (format == Format::json) {
        json results = json::array();
        for (const auto& r : rows) {
            results.push_back({{"strategy", r.strategy},
                               {"commutativity", verdict_name(r.commutativity)},
                               {"associativity", verdict_name(r.associativity)},
                               {"idempotency", verdict_name(r.idempotency)},
                               {"convergence", verdict_name(r.convergence)},
                               {"trials", r.trials},
                               {"max_violation", r.max_violation},
                               {"atol", r.atol},
                               {"crdt_compliant", r.crdt_compliant()}});
        }
        const json doc = {{"command", std::string(command)},
                          {"config", audit_config_json(cfg, rows)},
                          {"results", results},
                          {"summary",
                           {{"strategies", rows.size()},
                            {"crdt_compliant", compliant},
                            {"all_pass", compliant == rows.size()}}}};
        return doc.dump(2) + "\n";
    }

    if (format == Format::csv) {
        std::string out = csv_line({"strategy", "property", "verdict", "trials",
                                    "max_violation", "atol"});
        for (const auto& r : rows) {
            const std::pair<const char*, Verdict> props[] = {{"commutativity", r.commutativity},
                                                             {"associativity", r.associativity},
                                                             {"idempotency", r.idempotency},
                                                             {"convergence", r.convergence}};
            for (const auto& [name, verdict] : props) {
                out += csv_line({r.strategy, name, verdict_name(verdict),
                                 std::to_string(r.trials), sci(r.max_violation), sci(r.atol)});
            }
        }
        return out;
    }

    TextTable table({"Strategy", "C", "A", "I", "Conv", "CRDT?", "Trials", "MaxViolation"});
    for (const auto& r : rows) {
        table.add_row({r.strategy, std::string(1, verdict_letter(r.commutativity)),
                       std::string(1, verdict_letter(r.associativity)),
                       std::string(1, verdict_letter(r.idempotency)),
                       std::string(1, verdict_letter(r.convergence)),
                       r.crdt_compliant() ? "yes" : "no", std::to_string(r.trials),
                       sci(r.max_violation)});
    }
    std::string out = std::string(command) + " audit: shape ";
    for (std::size_t i = 0; i < cfg.shape.size(); ++i) {
        out += (i ? "x" : "") + std::to_string(cfg.shape[i]);
    }
    out += ", seed " + std::to_string(cfg.seed) + ", atol " + sci(cfg.atol) + ", trials " +
           std::to_string(cfg.trials) + "\n\n";
    out += table.str();
    out += "\nCRDT-compliant: " + std::to_string(compliant) + "/" + std::to_string(rows.size()) +
           " strategies\n";
    return out;
}

std::string render_convergence(const SimConfig& cfg, const std::vector<OrderingReport>& rows,
                               bool full_scale, Format format) {
    const bool all_equal = convergence_all_equal(rows);
    std::set<Hash256> outputs;
    for (const auto& r : rows) {
        outputs.insert(r.output_hash);
    }

    if (format == Format::json) {
        json results = json::array();
        for (const auto& r : rows) {
            results.push_back({{"ordering", r.ordering},
                               {"merge_calls", r.merge_calls},
                               {"gossip_ms", r.gossip_ms},
                               {"resolve_ms", r.resolve_ms},
                               {"max_diff", r.max_diff},
                               {"bitwise_equal", r.bitwise_equal},
                               {"output_hash", r.output_hash.hex()}});
        }
        json config = sim_config_json(cfg);
        config["orderings"] = cfg.orderings;
        config["full_scale"] = full_scale;
        const json doc = {{"command", "converge"},
                          {"config", config},
                          {"results", results},
                          {"summary",
                           {{"orderings", rows.size()},
                            {"all_bitwise_equal", all_equal},
                            {"distinct_outputs", outputs.size()}}}};
        return doc.dump(2) + "\n";
    }

    if (format == Format::csv) {
        std::string out = csv_line({"ordering", "merge_calls", "gossip_ms", "resolve_ms",
                                    "max_diff", "bitwise_equal", "output_hash"});
        for (const auto& r : rows) {
            out += csv_line({std::to_string(r.ordering), std::to_string(r.merge_calls),
                             fixed(r.gossip_ms, 3), fixed(r.resolve_ms, 3), sci(r.max_diff),
                             bool_word(r.bitwise_equal), r.output_hash.hex()});
        }
        return out;
    }

    TextTable table({"Ordering", "Merges", "Gossip(ms)", "Resolve(ms)", "MaxDiff", "Status"});
    for (const auto& r : rows) {
        table.add_row({std::to_string(r.ordering), std::to_string(r.merge_calls),
                       fixed(r.gossip_ms, 1), fixed(r.resolve_ms, 1), sci(r.max_diff),
                       r.bitwise_equal ? "bitwise-equal" : "DIVERGED"});
    }
    std::string out = "convergence: " + std::to_string(cfg.nodes) + " nodes, strategy " +
                      cfg.strategy.id + ", " + std::to_string(rows.size()) + " orderings\n\n";
    out += table.str();
    out += "\nAll orderings bitwise-equal: " + std::string(all_equal ? "yes" : "NO") +
           " (distinct outputs: " + std::to_string(outputs.size()) + ")\n";
    return out;
}

std::string render_partition(const SimConfig& cfg, const PartitionReport& rep, Format format) {
    if (format == Format::json) {
        json hashes = json::array();
        for (const auto& h : rep.partition_hashes) {
            hashes.push_back(h.hex());
        }
        json config = sim_config_json(cfg);
        config["partitions"] = cfg.partitions;
        const json doc = {{"command", "partition"},
                          {"config", config},
                          {"results",
                           {{"partition_hashes", hashes},
                            {"partitions_consistent", rep.partitions_consistent},
                            {"partition_hashes_distinct", rep.partition_hashes_distinct},
                            {"vv_isolated", rep.vv_isolated},
                            {"merge_calls", rep.merge_calls},
                            {"partition_ms", rep.partition_ms},
                            {"healing_ms", rep.healing_ms},
                            {"resolve_ms", rep.resolve_ms},
                            {"healed_converged", rep.healed_converged},
                            {"healed_hash", rep.healed_hash.hex()},
                            {"unpartitioned_hash", rep.unpartitioned_hash.hex()},
                            {"matches_unpartitioned", rep.matches_unpartitioned}}},
                          {"summary", {{"all_pass", rep.all_pass()}}}};
        return doc.dump(2) + "\n";
    }

    std::vector<std::pair<std::string, std::string>> fields;
    fields.emplace_back("nodes", std::to_string(rep.nodes));
    fields.emplace_back("partitions", std::to_string(rep.partitions));
    for (std::size_t i = 0; i < rep.partition_hashes.size(); ++i) {
        fields.emplace_back("partition_" + std::to_string(i) + "_hash",
                            rep.partition_hashes[i].hex());
    }
    fields.emplace_back("partitions_consistent", bool_word(rep.partitions_consistent));
    fields.emplace_back("partition_hashes_distinct", bool_word(rep.partition_hashes_distinct));
    fields.emplace_back("vv_isolated", bool_word(rep.vv_isolated));
    fields.emplace_back("merge_calls", std::to_string(rep.merge_calls));
    fields.emplace_back("partition_ms", fixed(rep.partition_ms, 1));
    fields.emplace_back("healing_ms", fixed(rep.healing_ms, 1));
    fields.emplace_back("resolve_ms", fixed(rep.resolve_ms, 1));
    fields.emplace_back("healed_converged", bool_word(rep.healed_converged));
    fields.emplace_back("healed_hash", rep.healed_hash.hex());
    fields.emplace_back("unpartitioned_hash", rep.unpartitioned_hash.hex());
    fields.emplace_back("matches_unpartitioned", bool_word(rep.matches_unpartitioned));
    fields.emplace_back("all_pass", bool_word(rep.all_pass()));

    if (format == Format::csv) {
        std::string out = csv_line({"metric", "value"});
        for (const auto& [k, v] : fields) {
            out += csv_line({k, v});
        }
        return out;
    }
    TextTable table({"Metric", "Value"});
    for (const auto& [k, v] : fields) {
        table.add_row({k, v});
    }
    return "partition healing: " + std::to_string(rep.nodes) + " nodes / " +
           std::to_string(rep.partitions) + " partitions, strategy " + cfg.strategy.id + "\n\n" +
           table.str();
}

std::string render_sweep(const SimConfig& cfg, const std::vector<SweepRow>& rows,
                         Format format) {
    if (format == Format::json) {
        json results = json::array();
        for (const auto& r : rows) {
            results.push_back({{"strategy", r.strategy},
                               {"gossip_ms", r.gossip_ms},
                               {"resolve_ms", r.resolve_ms},
                               {"converged", r.converged},
                               {"output_hash", r.output_hash.hex()}});
        }
        const json doc = {{"command", "sweep"},
                          {"config", sim_config_json(cfg)},
                          {"results", results},
                          {"summary",
                           {{"strategies", rows.size()},
                            {"all_converged", sweep_all_converged(rows)}}}};
        return doc.dump(2) + "\n";
    }
    if (format == Format::csv) {
        std::string out =
            csv_line({"strategy", "gossip_ms", "resolve_ms", "converged", "output_hash"});
        for (const auto& r : rows) {
            out += csv_line({r.strategy, fixed(r.gossip_ms, 3), fixed(r.resolve_ms, 3),
                             bool_word(r.converged), r.output_hash.hex()});
        }
        return out;
    }
    TextTable table({"Strategy", "Gossip(ms)", "Resolve(ms)", "Status"});
    for (const auto& r : rows) {
        table.add_row({r.strategy, fixed(r.gossip_ms, 1), fixed(r.resolve_ms, 1),
                       r.converged ? "converged" : "DIVERGED"});
    }
    return "strategy sweep: " + std::to_string(cfg.nodes) + " nodes\n\n" + table.str() +
           "\nAll converged: " + (sweep_all_converged(rows) ? "yes" : "NO") + "\n";
}

std::string render_bench(const SimConfig& cfg, const std::vector<ScaleRow>& rows,
                         Format format) {
    if (format == Format::json) {
        json results = json::array();
        std::uint64_t payload_total = 0;
        for (const auto& r : rows) {
            payload_total += r.payload_bytes_during_merge;
            results.push_back({{"nodes", r.nodes},
                               {"params", r.params},
                               {"merge_calls", r.merge_calls},
                               {"payload_bytes_during_merge", r.payload_bytes_during_merge},
                               {"gossip_ms", r.gossip_ms},
                               {"resolve_ms", r.resolve_ms},
                               {"converged", r.converged}});
        }
        const json doc = {{"command", "bench"},
                          {"config", sim_config_json(cfg)},
                          {"results", results},
                          {"summary",
                           {{"all_converged",
                             std::all_of(rows.begin(), rows.end(),
                                         [](const auto& r) { return r.converged; })},
                            {"payload_bytes_total", payload_total},
                            {"all_pass", bench_all_pass(rows)}}}};
        return doc.dump(2) + "\n";
    }
    if (format == Format::csv) {
        std::string out = csv_line({"nodes", "params", "merge_calls",
                                    "payload_bytes_during_merge", "gossip_ms", "resolve_ms",
                                    "converged"});
        for (const auto& r : rows) {
            out += csv_line({std::to_string(r.nodes), std::to_string(r.params),
                             std::to_string(r.merge_calls),
                             std::to_string(r.payload_bytes_during_merge),
                             fixed(r.gossip_ms, 3), fixed(r.resolve_ms, 3),
                             bool_word(r.converged)});
        }
        return out;
    }
    TextTable table({"Nodes", "Params", "Merges", "Gossip(ms)", "Resolve(ms)", "Status"});
    for (const auto& r : rows) {
        table.add_row({std::to_string(r.nodes), std::to_string(r.params),
                       std::to_string(r.merge_calls), fixed(r.gossip_ms, 1),
                       fixed(r.resolve_ms, 1), r.converged ? "converged" : "DIVERGED"});
    }
    return "scalability: strategy " + cfg.strategy.id + "\n\n" + table.str() +
           "\nAll rungs converged with zero merge payload reads: " +
           (bench_all_pass(rows) ? "yes" : "NO") + "\n";
}

std::string render_state_summary(const MergeState& state, std::string_view file,
                                 Format format) {
    const auto hashes = state.visible_hashes();
    if (format == Format::json) {
        json vv = json::object();
        for (const auto& [node, value] : state.version_vector().entries()) {
            vv[node.str()] = value;
        }
        json visible = json::array();
        for (const auto& h : hashes) {
            visible.push_back(h.hex());
        }
        const json doc = {{"command", "state"},          {"file", std::string(file)},
                          {"owner", state.owner().str()}, {"adds", state.adds().size()},
                          {"removes", state.removes().size()}, {"visible", hashes.size()},
                          {"version_vector", vv},        {"visible_hashes", visible},
                          {"root", state.root().hex()}};
        return doc.dump(2) + "\n";
    }
    std::vector<std::pair<std::string, std::string>> fields;
    fields.emplace_back("owner", state.owner().str());
    fields.emplace_back("adds", std::to_string(state.adds().size()));
    fields.emplace_back("removes", std::to_string(state.removes().size()));
    fields.emplace_back("visible", std::to_string(hashes.size()));
    std::string vv;
    for (const auto& [node, value] : state.version_vector().entries()) {
        if (!vv.empty()) {
            vv += ' ';
        }
        vv += node.str() + ":" + std::to_string(value);
    }
    fields.emplace_back("version_vector", vv.empty() ? "-" : vv);
    for (std::size_t i = 0; i < hashes.size(); ++i) {
        fields.emplace_back("visible_" + std::to_string(i), hashes[i].hex());
    }
    fields.emplace_back("root", state.root().hex());

    if (format == Format::csv) {
        std::string out = csv_line({"metric", "value"});
        for (const auto& [k, v] : fields) {
            out += csv_line({k, v});
        }
        return out;
    }
    TextTable table({"Field", "Value"});
    for (const auto& [k, v] : fields) {
        table.add_row({k, v});
    }
    return "state file: " + std::string(file) + "\n\n" + table.str();
}

bool audit_all_pass(const std::vector<PropertyVerdict>& rows) {
    return std::all_of(rows.begin(), rows.end(),
                       [](const auto& r) { return r.crdt_compliant(); });
}

bool convergence_all_equal(const std::vector<OrderingReport>& rows) {
    return std::all_of(rows.begin(), rows.end(),
                       [](const auto& r) { return r.bitwise_equal; });
}

bool sweep_all_converged(const std::vector<SweepRow>& rows) {
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.converged; });
}

bool bench_all_pass(const std::vector<ScaleRow>& rows) {
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) {
        return r.converged && r.payload_bytes_during_merge == 0;
    });
}

} // namespace crdtmerge
