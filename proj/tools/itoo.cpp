#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "itoo/core/errors.hpp"
#include "itoo/ingest/image.hpp"
#include "itoo/ingest/loaders.hpp"
#include "itoo/metric/evaluate.hpp"
#include "itoo/metric/trainer.hpp"
#include "itoo/pipeline/dag.hpp"
#include "itoo/pipeline/ootd_pipeline.hpp"
#include "itoo/service/config.hpp"
#include "itoo/service/engine.hpp"
#include "itoo/service/fixtures.hpp"
#include "itoo/service/server.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace itoo;

namespace {

struct Globals {
    std::string config_path;
    std::string data_dir;
    bool json_out = false;
};

EngineConfig engine_config(const Globals& g) {
    auto cfg = load_config(g.config_path.empty() ? std::nullopt : std::optional<fs::path>(g.config_path));
    if (!g.data_dir.empty()) cfg.data_dir = g.data_dir;
    return cfg;
}

CategoryHierarchy data_hierarchy(const EngineConfig& cfg) {
    const auto p = cfg.data_dir / "hierarchy.tsv";
    return fs::exists(p) ? CategoryHierarchy::load(p) : CategoryHierarchy::default_hierarchy();
}

void emit(const Globals& g, const json& j, const std::string& text) {
    if (g.json_out) {
        std::cout << j.dump() << '\n';
    } else {
        std::cout << text;
    }
}

json ranked_json(const std::vector<Ranked>& list) {
    json arr = json::array();
    for (const auto& r : list) {
        arr.push_back({{"id", r.id}, {"score", r.score}, {"source", std::string(to_string(r.source))}});
    }
    return arr;
}

std::string ranked_text(const std::vector<Ranked>& list) {
    std::ostringstream os;
    for (std::size_t i = 0; i < list.size(); ++i) {
        os << std::setw(3) << i + 1 << "  " << std::left << std::setw(10) << list[i].id << std::right << "  "
           << std::fixed << std::setprecision(4) << list[i].score << "  " << to_string(list[i].source) << '\n';
    }
    return os.str();
}

std::vector<std::size_t> parse_ks(const std::string& text) {
    std::vector<std::size_t> ks;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != part.size() || v == 0) throw ContractError("--ks: '" + part + "' is not a positive integer");
        ks.push_back(v);
    }
    if (ks.empty()) throw ContractError("--ks: empty list");
    return ks;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"iTOO fashion recommendation and visual search engine"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "Key-value config file")->check(CLI::ExistingFile);
    app.add_option("--data-dir", g.data_dir, "Data directory (overrides the config)");
    app.add_flag("--json", g.json_out, "Machine-readable JSON output");
    app.fallthrough();

    // fixtures
    auto* fixtures = app.add_subcommand("fixtures", "Write a synthetic data directory");
    std::string fx_out;
    FixtureSpec fx;
    fixtures->add_option("--out", fx_out, "Target directory (must be empty or absent)")->required();
    fixtures->add_option("--seed", fx.seed, "RNG seed");
    fixtures->add_option("--users", fx.users, "User count");
    fixtures->add_option("--ootds", fx.ootds, "OOTD count");
    fixtures->add_option("--uploads", fx.uploads, "Synthetic upload images");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Load and validate the data directory");

    // index
    auto* index = app.add_subcommand("index", "Vector index operations");
    index->require_subcommand(1);
    auto* index_build = index->add_subcommand("build", "Build per-super-category indexes");
    std::string index_out;
    index_build->add_option("--out", index_out, "Save the HNSW graphs to this directory");
    auto* index_query = index->add_subcommand("query", "Similar items for an item");
    std::string q_super;
    ItemId q_item = 0;
    std::size_t q_k = 10;
    std::optional<std::size_t> q_ef;
    index_query->add_option("--super", q_super, "Super-category of the item");
    index_query->add_option("--item-id", q_item, "Query item")->required();
    index_query->add_option("--k", q_k, "Result count")->check(CLI::Range(1, 100000));
    index_query->add_option("--ef", q_ef, "Search beam width");

    // train
    auto* train_cmd = app.add_subcommand("train", "Metric learning on a labeled image table");
    std::string tr_labels, tr_init, tr_out;
    std::size_t tr_dim = 32;
    std::optional<std::size_t> tr_epochs, tr_batch;
    std::optional<std::uint64_t> tr_seed;
    train_cmd->add_option("--labels", tr_labels, "CSV image_id,class_id[,source]")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--init", tr_init, "Initial vector table")->check(CLI::ExistingFile);
    train_cmd->add_option("--dim", tr_dim, "Dimension of a random initial table");
    train_cmd->add_option("--epochs", tr_epochs, "Epochs");
    train_cmd->add_option("--batch", tr_batch, "Pairs per batch");
    train_cmd->add_option("--seed", tr_seed, "Seed");
    train_cmd->add_option("--out", tr_out, "Trained table output")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Top-k self-retrieval accuracy");
    std::string ev_table, ev_labels, ev_ks = "1,5,10,20";
    eval_cmd->add_option("--table", ev_table, "Vector table")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--labels", ev_labels, "Labels CSV")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--ks", ev_ks, "Comma-separated k values");

    // recommend
    auto* rec = app.add_subcommand("recommend", "Recommendations from the current snapshot");
    rec->require_subcommand(1);
    std::string r_user, r_ootd;
    std::size_t r_k = 10;
    auto* rec_feed = rec->add_subcommand("feed", "Curated OOTD feed for a user");
    rec_feed->add_option("--user", r_user)->required();
    rec_feed->add_option("--k", r_k)->check(CLI::Range(1, 100000));
    auto* rec_similar = rec->add_subcommand("similar", "Similar-style OOTDs");
    rec_similar->add_option("--ootd", r_ootd)->required();
    rec_similar->add_option("--k", r_k)->check(CLI::Range(1, 100000));
    auto* rec_leaders = rec->add_subcommand("leaders", "Style leaders to follow");
    rec_leaders->add_option("--user", r_user)->required();
    rec_leaders->add_option("--k", r_k)->check(CLI::Range(1, 100000));

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "OOTD inference pipeline");
    pipe->require_subcommand(1);
    auto* pipe_run = pipe->add_subcommand("run", "Analyze one PPM image with the stub plugins");
    std::string p_image, p_annotations;
    pipe_run->add_option("--image", p_image, "Binary PPM image")->required()->check(CLI::ExistingFile);
    pipe_run->add_option("--annotations", p_annotations, "Annotations JSONL (default: data dir)");

    // dag
    auto* dag = app.add_subcommand("dag", "Task DAG runner");
    dag->require_subcommand(1);
    auto* dag_run = dag->add_subcommand("run", "Execute a task file");
    std::string d_file, d_trace;
    std::size_t d_workers = 4;
    int d_sleep = 0;
    std::vector<std::string> d_fail;
    dag_run->add_option("--file", d_file, "Task file")->required()->check(CLI::ExistingFile);
    dag_run->add_option("--workers", d_workers)->check(CLI::Range(1, 256));
    dag_run->add_option("--sleep-ms", d_sleep, "Simulated work per task")->check(CLI::Range(0, 600000));
    dag_run->add_option("--fail", d_fail, "Tasks that should fail");
    dag_run->add_option("--trace", d_trace, "Write the JSON-lines trace here");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the JSON HTTP API");
    std::optional<std::string> s_host;
    std::optional<int> s_port;
    serve_cmd->add_option("--host", s_host);
    serve_cmd->add_option("--port", s_port)->check(CLI::Range(0, 65535));

    CLI11_PARSE(app, argc, argv);

    try {
        if (fixtures->parsed()) {
            const auto s = write_fixture(fx_out, fx);
            std::ostringstream os;
            os << "wrote " << fx_out << ": " << s.items << " items, " << s.ootds << " OOTDs, " << s.users
               << " users, " << s.events << " events, " << s.uploads << " uploads\n";
            emit(g,
                 {{"dir", fx_out}, {"items", s.items}, {"ootds", s.ootds}, {"users", s.users}, {"events", s.events},
                  {"uploads", s.uploads}},
                 os.str());
        } else if (ingest->parsed()) {
            Engine engine(engine_config(g));
            const auto s = engine.stats();
            std::ostringstream os;
            os << "loaded " << engine.config().data_dir.string() << "\n  items   " << s.items << "\n  ootds   "
               << s.ootds << "\n  users   " << s.users << "\n  events  " << s.events << "\n  indexed "
               << s.indexed_items << "\n  clock   " << format_iso8601(s.clock) << "\n  version "
               << s.snapshot_version << '\n';
            emit(g,
                 {{"data_dir", engine.config().data_dir.string()}, {"items", s.items}, {"ootds", s.ootds},
                  {"users", s.users}, {"events", s.events}, {"indexed_items", s.indexed_items},
                  {"clock", format_iso8601(s.clock)}, {"snapshot_version", s.snapshot_version}},
                 os.str());
        } else if (index_build->parsed()) {
            const auto cfg = engine_config(g);
            const auto h = data_hierarchy(cfg);
            const auto md = load_metadata(cfg.data_dir / "metadata.jsonl");
            const auto search = load_embeddings(cfg.data_dir / "search.vec", cfg.dims.search);
            GroupedVectors grouped;
            for (const auto& it : md.items) {
                const auto v = search.vectors.find(it.item_id);
                if (v == search.vectors.end()) {
                    throw SchemaError("item " + std::to_string(it.item_id) + " has no search embedding");
                }
                grouped[h.require_super(it.sub_category)][it.item_id] = v->second;
            }
            const auto t0 = std::chrono::steady_clock::now();
            const auto cat = rebuild_catalog(IndexCatalog{}, grouped, cfg.catalog, Timestamp{});
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            json j = {{"seconds", secs}, {"indexes", json::array()}};
            std::ostringstream os;
            for (const auto& [super, e] : cat.entries()) {
                j["indexes"].push_back({{"super_category", super}, {"size", e.index->size()},
                                        {"shards", e.index->shard_count()}});
                os << std::left << std::setw(12) << super << std::right << std::setw(7) << e.index->size()
                   << " vectors, " << e.index->shard_count() << " shard(s)\n";
                if (!index_out.empty()) {
                    fs::create_directories(index_out);
                    for (std::size_t s = 0; s < e.index->shard_count(); ++s) {
                        e.index->shards()[s].save(fs::path(index_out) / (super + "." + std::to_string(s) + ".hnsw"));
                    }
                }
            }
            os << "built in " << std::fixed << std::setprecision(3) << secs << " s\n";
            emit(g, j, os.str());
        } else if (index_query->parsed()) {
            Engine engine(engine_config(g));
            const auto item = engine.item(q_item).value;
            const auto& super = engine.hierarchy().require_super(item.sub_category);
            if (!q_super.empty() && q_super != super) {
                throw ContractError("item " + std::to_string(q_item) + " is a '" + item.sub_category +
                                    "' in super-category '" + super + "', not '" + q_super + "'");
            }
            const auto hits = engine.similar_items(q_item, q_k, q_ef);
            json arr = json::array();
            std::ostringstream os;
            for (const auto& h : hits.value) {
                arr.push_back({{"item_id", h.id}, {"score", h.score}});
                os << std::setw(8) << h.id << "  " << std::fixed << std::setprecision(6) << h.score << '\n';
            }
            emit(g, {{"item_id", q_item}, {"super_category", super}, {"results", arr},
                     {"snapshot_version", hits.snapshot_version}},
                 os.str());
        } else if (train_cmd->parsed()) {
            auto tc = engine_config(g).train;
            if (tr_epochs) tc.epochs = *tr_epochs;
            if (tr_batch) tc.batch_pairs = *tr_batch;
            if (tr_seed) tc.seed = *tr_seed;
            const auto labels = load_labels(tr_labels);
            const LabelIndex index_labels(labels);
            EmbeddingTable init = tr_init.empty() ? EmbeddingTable::random(index_labels.images(), tr_dim, tc.seed)
                                                  : EmbeddingTable::load(tr_init);
            const auto result = train(std::move(init), index_labels, tc);
            result.table.save(tr_out);
            std::ostringstream os;
            os << "trained " << result.table.size() << " rows (d=" << result.table.dim() << ") for " << tc.epochs
               << " epochs\n";
            if (!result.epoch_loss.empty()) {
                os << "loss " << std::fixed << std::setprecision(6) << result.epoch_loss.front() << " -> "
                   << result.epoch_loss.back() << '\n';
            }
            os << "saved " << tr_out << '\n';
            emit(g, {{"rows", result.table.size()}, {"dim", result.table.dim()}, {"epoch_loss", result.epoch_loss},
                     {"smoothed_loss", result.smoothed_loss}, {"out", tr_out}},
                 os.str());
        } else if (eval_cmd->parsed()) {
            const auto ks = parse_ks(ev_ks);
            const auto table = EmbeddingTable::load(ev_table);
            const LabelIndex labels(load_labels(ev_labels));
            const auto report = evaluate_self_retrieval(table, labels, ks);
            if (g.json_out) {
                std::cout << report.to_json_lines();
            } else {
                std::cout << "queries " << report.n_queries << " (excluded " << report.n_excluded << ")\n";
                for (std::size_t i = 0; i < report.ks.size(); ++i) {
                    std::cout << "top-" << std::left << std::setw(4) << report.ks[i] << std::right << std::fixed
                              << std::setprecision(4) << report.accuracy[i] << '\n';
                }
            }
        } else if (rec->parsed()) {
            Engine engine(engine_config(g));
            Versioned<std::vector<Ranked>> r;
            json j;
            if (rec_feed->parsed()) {
                r = engine.feed(r_user, r_k);
                j["user"] = r_user;
            } else if (rec_similar->parsed()) {
                r = engine.similar_ootds(r_ootd, r_k);
                j["ootd_id"] = r_ootd;
            } else {
                r = engine.leaders(r_user, r_k);
                j["user"] = r_user;
            }
            j["results"] = ranked_json(r.value);
            j["snapshot_version"] = r.snapshot_version;
            emit(g, j, ranked_text(r.value));
        } else if (pipe_run->parsed()) {
            const auto cfg = engine_config(g);
            const auto h = data_hierarchy(cfg);
            const fs::path ann = p_annotations.empty() ? cfg.data_dir / "annotations.jsonl" : fs::path(p_annotations);
            AnnotationBook book;
            if (fs::exists(ann)) {
                book = load_annotations(ann);
            } else if (!p_annotations.empty()) {
                throw std::runtime_error("annotations file not found: " + ann.string());
            }
            const auto plugins = stub_plugins(cfg.plugin_seed, book, h, cfg.dims);
            PipelineOptions opts;
            opts.workers = cfg.pipeline_workers;
            opts.iou_threshold = cfg.iou_threshold;
            const auto result = run_ootd_pipeline(read_ppm(p_image), plugins, h, opts, nullptr);
            json crops = json::array();
            std::ostringstream os;
            for (const auto& c : result.crops) {
                json attrs = json::array();
                std::string attr_text;
                for (const auto& [k, v] : c.tags.attributes) {
                    attrs.push_back({k, v});
                    attr_text += " " + k + "=" + v;
                }
                crops.push_back({{"box", {c.box.x, c.box.y, c.box.w, c.box.h}},
                                 {"sub_category", c.classification.sub_category},
                                 {"confidence", c.classification.confidence},
                                 {"color", c.tags.color},
                                 {"attributes", attrs},
                                 {"fallback", c.fallback},
                                 {"embedding_dim", c.embedding.size()}});
                os << std::left << std::setw(16) << c.classification.sub_category << " " << std::setw(8) << c.tags.color
                   << std::right << "[" << c.box.x << "," << c.box.y << "," << c.box.w << "," << c.box.h << "]"
                   << attr_text << (c.fallback ? " (whole image)" : "") << '\n';
            }
            json errors = json::array();
            for (const auto& e : result.errors) {
                errors.push_back({{"crop_index", e.crop_index}, {"stage", e.stage}, {"message", e.message}});
                os << "crop " << e.crop_index << " " << e.stage << " failed: " << e.message << '\n';
            }
            emit(g, {{"crops", crops}, {"errors", errors}}, os.str());
        } else if (dag_run->parsed()) {
            const auto d = load_dag(d_file);
            validate_dag(d);
            const std::set<std::string> failing(d_fail.begin(), d_fail.end());
            for (const auto& f : failing) {
                if (!d.deps.count(f)) throw ContractError("--fail names unknown task '" + f + "'");
            }
            const auto run = execute_dag(d, d_workers, [&](const std::string& name, const auto&) {
                if (d_sleep > 0) std::this_thread::sleep_for(std::chrono::milliseconds(d_sleep));
                if (failing.count(name)) throw std::runtime_error("injected failure");
                return std::string("ok");
            });
            if (!d_trace.empty()) {
                std::ofstream out(d_trace);
                if (!out) throw std::runtime_error("cannot write trace file " + d_trace);
                out << run.trace_json_lines();
            }
            json tasks = json::array();
            std::ostringstream os;
            std::size_t failed = 0;
            for (const auto& name : d.tasks) {
                const auto& r = run.results.at(name);
                if (r.status != TaskStatus::succeeded) ++failed;
                tasks.push_back({{"task", name}, {"status", std::string(to_string(r.status))}, {"error", r.error}});
                os << std::left << std::setw(20) << name << to_string(r.status)
                   << (r.error.empty() ? "" : ": " + r.error) << '\n';
            }
            emit(g, {{"tasks", tasks}, {"completion_order", run.completion_order}}, os.str());
            if (failed > 0) {
                std::cerr << "error: " << failed << " task(s) did not succeed\n";
                return 2;
            }
        } else if (serve_cmd->parsed()) {
            auto cfg = engine_config(g);
            if (s_host) cfg.host = *s_host;
            if (s_port) cfg.port = *s_port;
            Engine engine(cfg);
            std::cerr << "serving " << cfg.data_dir.string() << " on http://" << cfg.host << ":" << cfg.port
                      << " (snapshot " << engine.snapshot_version() << ")\n";
            if (!serve(engine, cfg.host, cfg.port)) {
                std::cerr << "error: cannot listen on " << cfg.host << ":" << cfg.port << '\n';
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
