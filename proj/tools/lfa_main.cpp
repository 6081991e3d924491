#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lfa/errors.hpp"
#include "lfa/pipeline.hpp"

namespace {

struct GlobalFlags {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool offline = false;
    int workers = 0;
};

lfa::RunConfig load_with_overrides(const GlobalFlags& flags) {
    if (flags.config_path.empty()) {
        throw lfa::ConfigError("--config is required for this subcommand");
    }
    lfa::RunConfig cfg = lfa::load_config(flags.config_path);
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (flags.seed_set) cfg.seed = flags.seed;
    if (flags.workers > 0) cfg.workers = flags.workers;
    if (flags.offline) {
        cfg.offline = true;
        cfg.embedder.kind = lfa::EmbedderConfig::Kind::offline_hash;
        if (cfg.llm_mode == lfa::LlmMode::http) cfg.llm_mode = lfa::LlmMode::echo;
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent fragility audit for clinical-style text pipelines"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "run configuration file (JSON)");
    app.add_option("--out", flags.out_dir, "output directory override");
    auto* seed_opt = app.add_option("--seed", flags.seed, "run seed override");
    app.add_flag("--offline", flags.offline, "offline embedder and echo labels, no network");
    app.add_option("--workers", flags.workers, "worker thread count override");

    auto* generate = app.add_subcommand("generate", "generate notes from dialogues");
    auto* perturb = app.add_subcommand("perturb", "emit the perturbation variant matrix");
    auto* audit = app.add_subcommand("audit", "embed, probe, and write the fragility report");
    auto* report = app.add_subcommand("report", "render tables and plot data from a report");

    std::string report_path;
    std::string report_format = "text";
    std::string report_out = ".";
    report->add_option("--report", report_path, "path to report.json")->required();
    report->add_option("--format", report_format, "text or tsv");
    report->add_option("--out", report_out, "directory for rendered files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1; // usage errors exit 1
    }
    flags.seed_set = seed_opt->count() > 0;

    try {
        if (generate->parsed()) {
            lfa::GenerateResult res = lfa::cmd_generate(load_with_overrides(flags));
            std::cout << "generated " << res.generated << " notes -> " << res.notes_path.string()
                      << "\n";
        } else if (perturb->parsed()) {
            lfa::RunConfig cfg = load_with_overrides(flags);
            lfa::PerturbResult res = lfa::cmd_perturb(cfg);
            std::cout << "seed " << cfg.seed << ": wrote " << res.perturbed
                      << " perturbed variants + " << res.originals << " originals -> "
                      << res.variants_path.string() << "\n";
        } else if (audit->parsed()) {
            lfa::RunConfig cfg = load_with_overrides(flags);
            lfa::AuditResult res = lfa::cmd_audit(cfg);
            std::cout << "seed " << cfg.seed << ": " << res.rows.size()
                      << " metric rows, latent k=" << res.latent_k << " -> "
                      << res.report_path.string() << "\n";
        } else if (report->parsed()) {
            lfa::cmd_report(report_path, report_format, report_out);
            if (report_format == "text") {
                std::cout << lfa::render_report_table(report_path);
            } else {
                std::cout << "wrote delimited tables to " << report_out << "\n";
            }
        }
    } catch (const lfa::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const lfa::ProviderError& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return 3;
    } catch (const lfa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
