#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lfa/agent.hpp"
#include "lfa/config.hpp"
#include "lfa/corpus.hpp"
#include "lfa/latent.hpp"
#include "lfa/metrics.hpp"
#include "lfa/probe.hpp"

namespace lfa {

struct GenerateResult {
    std::filesystem::path notes_path;
    std::filesystem::path manifest_path;
    std::size_t generated = 0;
    std::size_t failed = 0;
};

// One note per dialogue through the chained prompts; failures are recorded in
// a partial-progress manifest and surfaced at the end.
GenerateResult cmd_generate(const RunConfig& cfg, ChatClient* client_override = nullptr);

struct PerturbResult {
    std::filesystem::path variants_path;
    std::size_t originals = 0;
    std::size_t perturbed = 0;
};

// Every (note, method, threshold) variant plus one original per note, fully
// deterministic given the run seed.
PerturbResult cmd_perturb(const RunConfig& cfg);

struct AuditResult {
    std::filesystem::path report_path;
    std::vector<MetricRow> rows;
    int latent_k = 0;
    double latent_cumulative_ratio = 0.0;
    CvResult cv;
};

// Embed (cache/resume aware), fit the latent model on unperturbed embeddings,
// fit the probe on their projections, collect per-variant labels, and write
// the report plus plot data and serialized models.
AuditResult cmd_audit(const RunConfig& cfg, ChatClient* client_override = nullptr);

// Renders the report into a text table ("text") or delimited tables ("tsv").
// Idempotent: output bytes depend only on the report file.
void cmd_report(const std::filesystem::path& report_path, const std::string& format,
                const std::filesystem::path& out_dir);

// Table rendered by `report --format text`, exposed for tests.
std::string render_report_table(const std::filesystem::path& report_path);

inline const char* tool_version() { return "0.1.0"; }

} // namespace lfa
