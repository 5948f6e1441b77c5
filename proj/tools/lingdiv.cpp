#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lingdiv/census.hpp"
#include "lingdiv/common.hpp"
#include "lingdiv/corpus.hpp"
#include "lingdiv/csv.hpp"
#include "lingdiv/geo.hpp"
#include "lingdiv/lang_id.hpp"
#include "lingdiv/metrics.hpp"
#include "lingdiv/pipeline.hpp"
#include "lingdiv/svg.hpp"
#include "lingdiv/synthetic.hpp"
#include "lingdiv/temporal.hpp"

namespace {

using namespace lingdiv;

void emit(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// "-" means stdout
void write_output(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write output file '" + path + "'");
    out << content;
    if (!out) throw data_error("short write to '" + path + "'");
}

std::string format_km(double km) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", km);
    return buf;
}

std::vector<corpus::TextRecord> load_records(const std::string& path, corpus::ParseReport* report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open records file '" + path + "'");
    auto parsed = corpus::parse_records(in);
    if (report) *report = parsed.report;
    return std::move(parsed.records);
}

// one <lang>.txt per language, stem = ISO 639-3 code
std::vector<std::pair<std::string, std::string>> load_corpus_dir(const std::string& dir) {
    if (!std::filesystem::is_directory(dir))
        throw config_error("corpus directory '" + dir + "' does not exist");
    std::vector<std::pair<std::string, std::string>> docs;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".txt")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::string code = f.stem().string();
        if (!is_language_code(code))
            throw config_error("corpus file '" + f.string() +
                               "': stem must be a 3-letter language code");
        docs.emplace_back(code, read_text_file(f.string()));
    }
    if (docs.empty()) throw config_error("corpus directory '" + dir + "' has no .txt files");
    return docs;
}

synthetic::SeedCorpora load_seed_corpora(const std::string& dir) {
    synthetic::SeedCorpora corpora;
    for (const auto& [code, text] : load_corpus_dir(dir)) {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            std::string t = trim(line);
            if (!t.empty()) corpora[code].push_back(std::move(t));
        }
    }
    return corpora;
}

metrics::Counts read_counts_csv(const std::string& path) {
    auto table = csv::read_file(path);
    const auto lang_c = table.column("lang");
    const auto count_c = table.column("count");
    metrics::Counts counts;
    for (const auto& row : table.rows) {
        long long n = csv::parse_int(row.at(count_c), "count");
        if (n < 0) throw data_error("counts: negative count for '" + row.at(lang_c) + "'");
        counts[row.at(lang_c)] += static_cast<std::uint64_t>(n);
    }
    if (counts.empty()) throw data_error("counts file '" + path + "' has no rows");
    return counts;
}

struct RunFlagStore {
    std::string config_path;
    std::map<std::string, std::string> scalars;
    std::map<std::string, CLI::Option*> opts;
    std::vector<std::string> exclusions;
};

void add_run_options(CLI::App* cmd, const std::shared_ptr<RunFlagStore>& store) {
    cmd->add_option("--config", store->config_path, "flat key = value config file");
    for (const auto& key : pipeline::config_keys()) {
        if (key == "exclusion") continue;
        store->opts[key] = cmd->add_option("--" + key, store->scalars[key], "config key " + key);
    }
    cmd->add_option("--exclusion", store->exclusions, "exact string to excise from record text");
}

pipeline::RunConfig resolve_config(const RunFlagStore& store) {
    pipeline::RunConfig cfg;
    if (!store.config_path.empty()) cfg = pipeline::load_config(store.config_path);
    for (const auto& [key, opt] : store.opts)
        if (opt->count() > 0) pipeline::apply_override(cfg, key, store.scalars.at(key));
    for (const auto& e : store.exclusions) pipeline::apply_override(cfg, "exclusion", e);
    return cfg;
}

struct StageOutput {
    temporal::Buckets buckets;
    std::size_t parsed_ok = 0;
    std::size_t rejected = 0;
};

// parse -> (filter) -> label -> assign -> eligible -> monthly buckets
StageOutput build_buckets(const pipeline::RunConfig& cfg) {
    pipeline::require_file("records", cfg.records);
    pipeline::require_file("centres", cfg.centres);
    pipeline::require_file("model", cfg.model);
    auto centres = geo::load_centres(cfg.centres);
    corpus::ParseReport report;
    auto records = load_records(cfg.records, &report);
    if (!cfg.exclusions.empty()) records = corpus::filter_strings(records, cfg.exclusions);
    auto model = lang_id::LanguageProfileSet::load(cfg.model);
    auto labeled = lang_id::label_records(model, records, cfg.policy);
    std::vector<geo::RegionAssignment> assignments;
    assignments.reserve(labeled.size());
    for (const auto& rec : labeled)
        assignments.push_back(geo::assign_centre(rec.id, rec.point(), centres, cfg.radius_km));
    auto elig = temporal::make_eligible(labeled, assignments);
    StageOutput out;
    out.buckets = temporal::bucket_monthly(elig.eligible);
    out.parsed_ok = report.parsed;
    out.rejected = report.rejected;
    return out;
}

void setup_lid(CLI::App& app) {
    auto* lid = app.add_subcommand("lid", "character n-gram language identification");
    lid->require_subcommand(1);

    auto train_opts = std::make_shared<std::tuple<std::string, std::string, lang_id::LangIdConfig>>();
    auto* train = lid->add_subcommand("train", "train a model from a directory of <lang>.txt files");
    train->add_option("--corpus", std::get<0>(*train_opts), "directory of <lang>.txt files")->required();
    train->add_option("--out", std::get<1>(*train_opts), "model JSON output path")->required();
    train->add_option("--ngram-max", std::get<2>(*train_opts).ngram_order_max, "max n-gram order");
    train->add_option("--alpha", std::get<2>(*train_opts).alpha, "additive smoothing");
    train->add_option("--min-chars", std::get<2>(*train_opts).min_chars, "shorter texts classify as und");
    train->callback([train_opts] {
        const auto& [corpus_dir, out_path, cfg] = *train_opts;
        auto docs = load_corpus_dir(corpus_dir);
        auto model = lang_id::LanguageProfileSet::train(docs, cfg);
        model.save(out_path);
        nlohmann::json langs = nlohmann::json::array();
        for (const auto& [code, _] : model.profiles()) langs.push_back(code);
        emit({{"model", out_path}, {"languages", langs}, {"vocabulary", model.vocabulary_size()}});
    });

    struct ClassifyOpts {
        std::string model, in, out, text;
        std::string policy = "reuse_existing";
    };
    auto cls_opts = std::make_shared<ClassifyOpts>();
    auto* cls = lid->add_subcommand("classify", "label records (or one --text) with a trained model");
    cls->add_option("--model", cls_opts->model, "model JSON path")->required();
    cls->add_option("--in", cls_opts->in, "records JSONL input");
    cls->add_option("--out", cls_opts->out, "labeled JSONL output ('-' for stdout)");
    cls->add_option("--text", cls_opts->text, "classify a single text instead of a file");
    cls->add_option("--policy", cls_opts->policy, "reuse_existing | overwrite");
    cls->callback([cls_opts] {
        auto model = lang_id::LanguageProfileSet::load(cls_opts->model);
        if (!cls_opts->text.empty()) {
            auto res = model.classify(cls_opts->text);
            emit({{"code", res.code}, {"score", res.score}});
            return;
        }
        if (cls_opts->in.empty() || cls_opts->out.empty())
            throw config_error("classify: need --in and --out (or --text)");
        corpus::ParseReport report;
        auto records = load_records(cls_opts->in, &report);
        auto labeled =
            lang_id::label_records(model, records, lang_id::parse_policy(cls_opts->policy));
        std::ostringstream buf;
        corpus::serialize_records(buf, labeled);
        write_output(cls_opts->out, buf.str());
        emit({{"labeled", labeled.size()}, {"parse", corpus::report_json(report)}});
    });
}

void setup_geo(CLI::App& app) {
    auto* geo_cmd = app.add_subcommand("geo", "population-centre assignment and diagnostics");
    geo_cmd->require_subcommand(1);

    struct AssignOpts {
        std::string records, centres, out, coverage;
        double radius = geo::kDefaultRadiusKm;
    };
    auto a_opts = std::make_shared<AssignOpts>();
    auto* assign = geo_cmd->add_subcommand("assign", "assign records to centres within the radius");
    assign->add_option("--records", a_opts->records, "records JSONL")->required();
    assign->add_option("--centres", a_opts->centres, "centres CSV")->required();
    assign->add_option("--radius_km", a_opts->radius, "catchment radius in km");
    assign->add_option("--out", a_opts->out, "assignments CSV output")->required();
    assign->add_option("--coverage", a_opts->coverage, "coverage report JSON output");
    assign->callback([a_opts] {
        auto centres = geo::load_centres(a_opts->centres);
        auto records = load_records(a_opts->records, nullptr);
        std::vector<geo::RegionAssignment> assignments;
        assignments.reserve(records.size());
        for (const auto& rec : records)
            assignments.push_back(geo::assign_centre(rec.id, rec.point(), centres, a_opts->radius));
        std::ostringstream buf;
        csv::write_row(buf, {"record_id", "centre_id", "region_code", "distance_km"});
        for (const auto& a : assignments)
            csv::write_row(buf, {a.record_id, a.centre_id.value_or(""), a.region_code.value_or(""),
                                 a.assigned() ? format_km(a.distance_km) : ""});
        write_output(a_opts->out, buf.str());
        auto coverage = geo::coverage_json(geo::make_coverage(assignments));
        if (!a_opts->coverage.empty()) write_output(a_opts->coverage, coverage.dump(2) + "\n");
        emit(coverage);
    });

    struct DiagnoseOpts {
        std::string centres;
        std::string out = "-";
        double radius = geo::kDefaultRadiusKm;
    };
    auto d_opts = std::make_shared<DiagnoseOpts>();
    auto* diag = geo_cmd->add_subcommand("diagnose", "cross-region centre pairs closer than 2 * radius");
    diag->add_option("--centres", d_opts->centres, "centres CSV")->required();
    diag->add_option("--radius_km", d_opts->radius, "catchment radius in km");
    diag->add_option("--out", d_opts->out, "overlap CSV output ('-' for stdout)");
    diag->callback([d_opts] {
        auto centres = geo::load_centres(d_opts->centres);
        std::map<std::string, std::string> region_of;
        for (const auto& c : centres) region_of[c.centre_id] = c.region_code;
        auto overlaps = geo::overlap_diagnostics(centres, d_opts->radius);
        std::ostringstream buf;
        csv::write_row(buf, {"centre_a", "centre_b", "region_a", "region_b", "distance_km"});
        for (const auto& o : overlaps)
            csv::write_row(buf, {o.centre_a, o.centre_b, region_of.at(o.centre_a),
                                 region_of.at(o.centre_b), format_km(o.distance_km)});
        write_output(d_opts->out, buf.str());
    });
}

void setup_metrics(CLI::App& app) {
    auto* m = app.add_subcommand("metrics", "concentration ratios over count tables");
    m->require_subcommand(1);

    struct CrOpts {
        std::string counts;
        std::size_t n = 10;
    };
    auto cr_opts = std::make_shared<CrOpts>();
    auto* cr = m->add_subcommand("cr", "CR_n, band, and HHI of a lang,count CSV");
    cr->add_option("--counts", cr_opts->counts, "CSV with header lang,count")->required();
    cr->add_option("--n", cr_opts->n, "number of top shares to sum");
    cr->callback([cr_opts] {
        auto table = metrics::share_table(read_counts_csv(cr_opts->counts));
        double cr_v = metrics::concentration_ratio(table, cr_opts->n);
        emit({{"n", cr_opts->n},
              {"cr", cr_v},
              {"band", metrics::band_name(metrics::classify_band(cr_v))},
              {"hhi", metrics::hhi(table)},
              {"languages", table.entries().size()},
              {"total", table.total()}});
    });

    struct RanksOpts {
        std::string counts;
        std::string out = "-";
        std::string region = "NATIONAL";
        std::string period = "ALL";
        std::size_t n = 10;
    };
    auto r_opts = std::make_shared<RanksOpts>();
    auto* ranks = m->add_subcommand("ranks", "top-N share table of a lang,count CSV");
    ranks->add_option("--counts", r_opts->counts, "CSV with header lang,count")->required();
    ranks->add_option("--n", r_opts->n, "rows to keep");
    ranks->add_option("--region", r_opts->region, "scope region code");
    ranks->add_option("--period", r_opts->period, "scope period");
    ranks->add_option("--out", r_opts->out, "ranks CSV output ('-' for stdout)");
    ranks->callback([r_opts] {
        auto table =
            metrics::share_table(read_counts_csv(r_opts->counts), {r_opts->region, r_opts->period});
        std::ostringstream buf;
        pipeline::write_ranks_csv(buf, metrics::top_n_ranks(table, r_opts->n));
        write_output(r_opts->out, buf.str());
    });
}

void setup_census(CLI::App& app) {
    auto* c = app.add_subcommand("census", "census ETL baselines");

    struct CrOpts {
        std::string census, concordance;
        std::string out;
        int cycle = 0;
        std::size_t n = 10;
        bool keep_excluded = false;
    };
    auto opts = std::make_shared<CrOpts>();
    auto* cr = c->add_subcommand("cr", "per-region and national CR_n for one census cycle");
    cr->add_option("--census", opts->census, "census CSV")->required();
    cr->add_option("--concordance", opts->concordance, "label,code concordance CSV")->required();
    cr->add_option("--cycle", opts->cycle, "census year")->required();
    cr->add_option("--n", opts->n, "number of top shares to sum");
    cr->add_option("--out", opts->out, "per-region CR table CSV output");
    cr->add_flag("--keep-excluded", opts->keep_excluded,
                 "keep rows the default exclusions would drop");
    cr->callback([opts] {
        auto table = census::load_census(opts->census);
        if (!opts->keep_excluded)
            table = census::apply_exclusions(table, census::default_exclusions());
        auto conc = census::LabelConcordance::load(opts->concordance);
        auto mapped = census::map_labels(table, conc);
        auto cycle_it = mapped.find(opts->cycle);
        if (cycle_it == mapped.end()) {
            std::string have;
            for (const auto& [cy, _] : mapped) have += (have.empty() ? "" : ", ") + std::to_string(cy);
            throw data_error("census: cycle " + std::to_string(opts->cycle) +
                             " not present (have: " + have + ")");
        }
        std::ostringstream buf;
        csv::write_row(buf, {"region_code", "cr"});
        for (const auto& [region, counts] : cycle_it->second)
            csv::write_row(buf, {region, csv::format_fraction(census::census_cr(
                                             counts, opts->n,
                                             {region, std::to_string(opts->cycle)}))});
        if (!opts->out.empty()) write_output(opts->out, buf.str());
        double national = census::census_cr(census::national_counts(mapped, opts->cycle), opts->n,
                                            {"NATIONAL", std::to_string(opts->cycle)});
        emit({{"cycle", opts->cycle},
              {"n", opts->n},
              {"cr", national},
              {"band", metrics::band_name(metrics::classify_band(national))},
              {"regions", cycle_it->second.size()}});
    });
    c->require_subcommand(1);
}

void setup_series(CLI::App& app) {
    auto* s = app.add_subcommand("series", "monthly per-region series from raw records");
    s->require_subcommand(1);

    auto cr_store = std::make_shared<RunFlagStore>();
    auto cr_out = std::make_shared<std::string>("-");
    auto* cr = s->add_subcommand("cr", "CR series with bootstrap confidence bands");
    add_run_options(cr, cr_store);
    cr->add_option("--out", *cr_out, "series CSV output ('-' for stdout)");
    cr->callback([cr_store, cr_out] {
        auto cfg = resolve_config(*cr_store);
        auto stages = build_buckets(cfg);
        auto series = temporal::cr_series(stages.buckets, cfg.cr_n, cfg.bootstrap, cfg.min_bucket_size);
        std::ostringstream buf;
        pipeline::write_cr_series_csv(buf, series.points);
        write_output(*cr_out, buf.str());
        if (*cr_out != "-")
            emit({{"points", series.points.size()}, {"dropped_buckets", series.dropped.size()}});
    });

    auto pr_store = std::make_shared<RunFlagStore>();
    auto pr_out = std::make_shared<std::string>("-");
    auto* pr = s->add_subcommand("proportions", "top-N language share series plus OTHER");
    add_run_options(pr, pr_store);
    pr->add_option("--out", *pr_out, "proportions CSV output ('-' for stdout)");
    pr->callback([pr_store, pr_out] {
        auto cfg = resolve_config(*pr_store);
        auto stages = build_buckets(cfg);
        auto props = temporal::proportions_series(stages.buckets, cfg.cr_n, cfg.min_bucket_size);
        std::ostringstream buf;
        pipeline::write_proportions_csv(buf, props);
        write_output(*pr_out, buf.str());
        if (*pr_out != "-") emit({{"points", props.size()}});
    });
}

void setup_compare(CLI::App& app) {
    struct CompareOpts {
        std::vector<std::string> inputs;
        std::string out_table, out_corr;
    };
    auto opts = std::make_shared<CompareOpts>();
    auto* cmp = app.add_subcommand("compare", "correlate CR tables keyed by region_code");
    cmp->add_option("inputs", opts->inputs, "CR table CSVs (region_code plus CR columns)")
        ->required()
        ->expected(-1);
    cmp->add_option("--out-table", opts->out_table, "side-by-side comparison CSV output");
    cmp->add_option("--out-corr", opts->out_corr, "pair,r,n correlations CSV output");
    cmp->callback([opts] {
        auto result = pipeline::compare_sources(pipeline::load_cr_tables(opts->inputs));
        if (!opts->out_table.empty()) {
            std::ostringstream buf;
            pipeline::write_comparison_csv(buf, result);
            write_output(opts->out_table, buf.str());
        }
        if (!opts->out_corr.empty()) {
            std::ostringstream buf;
            pipeline::write_correlations_csv(buf, result);
            write_output(opts->out_corr, buf.str());
        }
        emit(pipeline::compare_json(result));
    });
}

void setup_synth(CLI::App& app) {
    auto* sy = app.add_subcommand("synth", "synthetic ground-truth record streams");
    sy->require_subcommand(1);

    struct GenOpts {
        std::string spec, out, corpora;
        std::vector<std::string> months;
        std::size_t count = 0;
        std::uint64_t seed = 0;
        std::size_t cr_n = 10;
    };
    auto opts = std::make_shared<GenOpts>();
    auto* gen = sy->add_subcommand("generate", "draw records from a known population spec");
    gen->add_option("--spec", opts->spec, "population spec JSON")->required();
    gen->add_option("--count", opts->count, "records to generate")->required();
    gen->add_option("--months", opts->months, "YYYY-MM list")->required()->delimiter(',');
    gen->add_option("--seed", opts->seed, "generator seed");
    gen->add_option("--corpora", opts->corpora, "directory of <lang>.txt seed sentences");
    gen->add_option("--cr-n", opts->cr_n, "n for the reported true/estimated CR");
    gen->add_option("--out", opts->out, "records JSONL output ('-' for stdout)")->required();
    gen->callback([opts] {
        auto spec = synthetic::PopulationSpec::load(opts->spec);
        synthetic::SeedCorpora corpora;
        if (!opts->corpora.empty()) corpora = load_seed_corpora(opts->corpora);
        auto records = synthetic::generate(spec, opts->count, opts->months, opts->seed, corpora);
        std::ostringstream buf;
        corpus::serialize_records(buf, records);
        write_output(opts->out, buf.str());
        auto err = synthetic::estimator_error(spec, records, opts->cr_n);
        emit({{"records", records.size()},
              {"regions", spec.regions.size()},
              {"cr_n", opts->cr_n},
              {"cr_true", err.cr_true},
              {"cr_est", err.cr_est},
              {"abs_error", err.abs_error}});
    });
}

void setup_render(CLI::App& app) {
    struct RenderOpts {
        std::string in, out;
        svg::RenderOptions render;
    };
    auto opts = std::make_shared<RenderOpts>();
    auto* r = app.add_subcommand("render", "series CSV to a line-chart SVG");
    r->add_option("--in", opts->in, "series CSV input")->required();
    r->add_option("--out", opts->out, "SVG output ('-' for stdout)")->required();
    r->add_option("--value-column", opts->render.value_column, "column to plot");
    r->add_option("--title", opts->render.title, "chart title");
    r->add_option("--width", opts->render.width, "SVG width");
    r->add_option("--height", opts->render.height, "SVG height");
    r->callback([opts] {
        write_output(opts->out, svg::render_series_svg(csv::read_file(opts->in), opts->render));
    });
}

void setup_run(CLI::App& app) {
    auto store = std::make_shared<RunFlagStore>();
    auto* run = app.add_subcommand("run", "full pipeline: records to CSVs plus report.json");
    add_run_options(run, store);
    run->callback([store] {
        auto cfg = resolve_config(*store);
        auto report = pipeline::run_pipeline(cfg);
        emit(pipeline::report_to_json(report, cfg));
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"linguistic diversity measures over georeferenced text corpora"};
    app.require_subcommand(1);
    setup_lid(app);
    setup_geo(app);
    setup_metrics(app);
    setup_census(app);
    setup_series(app);
    setup_compare(app);
    setup_synth(app);
    setup_render(app);
    setup_run(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << nlohmann::json{{"error", "config"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const lingdiv::config_error& e) {
        std::cerr << nlohmann::json{{"error", "config"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const lingdiv::data_error& e) {
        std::cerr << nlohmann::json{{"error", "data"}, {"message", e.what()}}.dump() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
        return 4;
    }
    return 0;
}
