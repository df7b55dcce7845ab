#include "itoo/service/engine.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "itoo/core/errors.hpp"
#include "itoo/ingest/json_codec.hpp"
#include "itoo/ingest/loaders.hpp"

namespace itoo {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- Journal

Journal::Journal(fs::path path) : path_(std::move(path)) {
    const bool existed = fs::exists(path_);
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw std::runtime_error("cannot open journal " + path_.string() + ": " + std::strerror(errno));
    if (!existed) {
        const auto dir = path_.has_parent_path() ? path_.parent_path() : fs::path(".");
        const int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
        if (dfd >= 0) {
            ::fsync(dfd);
            ::close(dfd);
        }
    }
}

Journal::~Journal() {
    if (fd_ >= 0) ::close(fd_);
}

std::vector<json> Journal::read_all() {
    std::ifstream in(path_, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();

    std::vector<json> out;
    std::size_t pos = 0;
    std::uint64_t lineno = 0;
    while (pos < text.size()) {
        ++lineno;
        const auto nl = text.find('\n', pos);
        const bool complete = nl != std::string::npos;
        const std::string line = text.substr(pos, complete ? nl - pos : std::string::npos);
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            try {
                out.push_back(json::parse(line));
            } catch (const json::exception& e) {
                if (complete) throw ParseError(std::string("journal: ") + e.what(), lineno);
                // Torn tail from an interrupted append: drop it.
                if (::ftruncate(fd_, static_cast<off_t>(pos)) != 0) {
                    throw std::runtime_error("cannot truncate journal: " + std::string(std::strerror(errno)));
                }
                ::fsync(fd_);
                break;
            }
            if (!complete) {
                const char newline = '\n';
                if (::write(fd_, &newline, 1) != 1) throw std::runtime_error("cannot repair journal tail");
                ::fsync(fd_);
            }
        }
        if (!complete) break;
        pos = nl + 1;
    }
    return out;
}

void Journal::append(const json& record) {
    const std::string line = record.dump() + "\n";
    std::size_t done = 0;
    while (done < line.size()) {
        const auto n = ::write(fd_, line.data() + done, line.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error("journal write failed: " + std::string(std::strerror(errno)));
        }
        done += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw std::runtime_error("journal fsync failed: " + std::string(std::strerror(errno)));
}

// ---------------------------------------------------------------- Engine

Engine::Engine(EngineConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.rec.validate();
    cfg_.catalog.dim = cfg_.dims.search;
    load_base();

    AnnotationBook book;
    if (fs::exists(cfg_.data_dir / "annotations.jsonl")) book = load_annotations(cfg_.data_dir / "annotations.jsonl");
    plugins_ = stub_plugins(cfg_.plugin_seed, std::move(book), hierarchy_, cfg_.dims);

    const Timestamp now = cfg_.now.value_or(newest_data_time());
    RecInputs in;
    for (const auto& [_, it] : stores_.items) in.items.push_back(it);
    for (const auto& [_, o] : stores_.ootds) in.ootds.push_back(o);
    for (const auto& [_, u] : stores_.users) in.users.push_back(u);
    in.events = stores_.events;
    in.now = now;
    snap_.rec = std::make_unique<Recommender>(std::move(in), cfg_.rec);
    auto catalog = rebuild_catalog(IndexCatalog{}, grouped_vectors(stores_.items), cfg_.catalog, now);
    catalog.set_version(1);
    snap_.catalog = std::make_shared<const IndexCatalog>(std::move(catalog));
    snap_.version = 1;
    indexed_ = stores_.items.size();

    journal_ = std::make_unique<Journal>(cfg_.data_dir / "journal.jsonl");
    for (const auto& rec : journal_->read_all()) replay(rec);
}

void Engine::load_base() {
    const auto& dir = cfg_.data_dir;
    if (!fs::is_directory(dir)) throw std::runtime_error("data directory " + dir.string() + " does not exist");
    hierarchy_ = fs::exists(dir / "hierarchy.tsv") ? CategoryHierarchy::load(dir / "hierarchy.tsv")
                                                   : CategoryHierarchy::default_hierarchy();
    if (const auto v = validate_hierarchy(hierarchy_); !v.empty()) {
        std::string msg = "invalid hierarchy:";
        for (const auto& s : v) msg += " " + s + ";";
        throw SchemaError(msg);
    }

    auto md = load_metadata(dir / "metadata.jsonl");
    const auto cls = load_embeddings(dir / "classifier.vec", static_cast<std::uint32_t>(cfg_.dims.classifier));
    const auto tag = load_embeddings(dir / "tagger.vec", static_cast<std::uint32_t>(cfg_.dims.tagger));
    const auto search = load_embeddings(dir / "search.vec", static_cast<std::uint32_t>(cfg_.dims.search));
    auto attach = [](ItemRecord& it, const EmbeddingFile& f, std::vector<float>& slot, const char* what) {
        if (!slot.empty()) return;
        const auto v = f.vectors.find(it.item_id);
        if (v == f.vectors.end()) {
            throw SchemaError("item " + std::to_string(it.item_id) + " has no " + what + " embedding");
        }
        slot = v->second;
    };
    for (auto& it : md.items) {
        attach(it, cls, it.classifier_embedding, "classifier");
        attach(it, tag, it.tagger_embedding, "tagger");
        attach(it, search, it.search_embedding, "search");
        validate_item(it, hierarchy_, cfg_.dims);
        if (!stores_.items.emplace(it.item_id, it).second) {
            throw SchemaError("duplicate item id " + std::to_string(it.item_id));
        }
    }
    for (auto& u : md.users) {
        if (!stores_.users.emplace(u.user_id, u).second) throw SchemaError("duplicate user '" + u.user_id + "'");
    }
    for (auto& o : md.ootds) {
        if (!stores_.users.count(o.uploader_id)) {
            throw SchemaError("OOTD '" + o.ootd_id + "' has unknown uploader '" + o.uploader_id + "'");
        }
        for (ItemId id : o.item_ids) {
            if (!stores_.items.count(id)) {
                throw SchemaError("OOTD '" + o.ootd_id + "' references unknown item " + std::to_string(id));
            }
        }
        if (!stores_.ootds.emplace(o.ootd_id, o).second) throw SchemaError("duplicate OOTD '" + o.ootd_id + "'");
    }
    for (const auto& u : md.users) {
        for (const auto& f : u.follows) {
            if (!stores_.users.count(f)) {
                throw SchemaError("user '" + u.user_id + "' follows unknown user '" + f + "'");
            }
        }
    }
    if (fs::exists(dir / "interactions.csv")) stores_.events = load_interactions(dir / "interactions.csv");
    for (const auto& e : stores_.events) {
        try {
            validate_interaction(e);
        } catch (const std::exception& ex) {
            throw SchemaError(std::string("interactions.csv: ") + ex.what());
        }
    }
}

Timestamp Engine::newest_data_time() const {
    Timestamp t{};
    for (const auto& e : stores_.events) t = std::max(t, e.timestamp);
    for (const auto& [_, o] : stores_.ootds) t = std::max(t, o.created_at);
    return t;
}

GroupedVectors Engine::grouped_vectors(const std::map<ItemId, ItemRecord>& items) const {
    GroupedVectors g;
    for (const auto& [id, it] : items) g[hierarchy_.require_super(it.sub_category)][id] = it.search_embedding;
    return g;
}

void Engine::set_plugins(ModelPlugins plugins) {
    std::lock_guard w(writer_mu_);
    plugins_ = std::move(plugins);
}

std::uint64_t Engine::snapshot_version() const {
    std::shared_lock lock(state_mu_);
    return snap_.version;
}

Timestamp Engine::clock() const {
    std::shared_lock lock(state_mu_);
    return snap_.rec->now();
}

EngineStats Engine::stats() const {
    std::shared_lock lock(state_mu_);
    return {snap_.version,
            snap_.rec->now(),
            stores_.items.size(),
            stores_.ootds.size(),
            stores_.users.size(),
            stores_.events.size(),
            snap_.catalog->total_size(),
            stores_.items.size() - indexed_};
}

std::vector<UserId> Engine::users() const {
    std::shared_lock lock(state_mu_);
    std::vector<UserId> ids;
    for (const auto& [id, _] : stores_.users) ids.push_back(id);
    return ids;
}

Versioned<std::vector<Ranked>> Engine::feed(const UserId& u, std::size_t k) const {
    std::shared_lock lock(state_mu_);
    return {snap_.version, snap_.rec->curate_feed(u, k)};
}

Versioned<std::vector<Ranked>> Engine::similar_ootds(const OotdId& o, std::size_t k) const {
    std::shared_lock lock(state_mu_);
    return {snap_.version, snap_.rec->similar_style_ootds(o, k)};
}

Versioned<std::vector<Ranked>> Engine::leaders(const UserId& u, std::size_t k) const {
    std::shared_lock lock(state_mu_);
    return {snap_.version, snap_.rec->suggest_style_leaders(u, k)};
}

Versioned<std::vector<SearchHit>> Engine::similar_items(ItemId id, std::size_t k, std::optional<std::size_t> ef) const {
    std::shared_lock lock(state_mu_);
    const auto it = stores_.items.find(id);
    if (it == stores_.items.end()) throw NotFoundError("unknown item " + std::to_string(id));
    const auto& super = hierarchy_.require_super(it->second.sub_category);
    return {snap_.version, snap_.catalog->search(super, it->second.search_embedding, k, ef)};
}

Versioned<std::vector<SearchHit>> Engine::similar_to_vector(const std::string& super, std::span<const float> v,
                                                            std::size_t k, std::optional<std::size_t> ef) const {
    if (!hierarchy_.has_super(super)) throw NotFoundError("unknown super-category '" + super + "'");
    std::shared_lock lock(state_mu_);
    return {snap_.version, snap_.catalog->search(super, v, k, ef)};
}

Versioned<OotdDetail> Engine::ootd_detail(const OotdId& o) const {
    std::shared_lock lock(state_mu_);
    const auto it = stores_.ootds.find(o);
    if (it == stores_.ootds.end()) throw NotFoundError("unknown OOTD '" + o + "'");
    OotdDetail d{it->second, {}};
    for (ItemId id : it->second.item_ids) d.items.push_back(stores_.items.at(id));
    return {snap_.version, std::move(d)};
}

Versioned<ItemRecord> Engine::item(ItemId id) const {
    std::shared_lock lock(state_mu_);
    const auto it = stores_.items.find(id);
    if (it == stores_.items.end()) throw NotFoundError("unknown item " + std::to_string(id));
    return {snap_.version, it->second};
}

Versioned<UserProfile> Engine::user(const UserId& u) const {
    std::shared_lock lock(state_mu_);
    return {snap_.version, snap_.rec->user(u)};
}

void Engine::validate_interaction(const InteractionEvent& e) const {
    if (!stores_.users.count(e.user_id)) throw NotFoundError("unknown user '" + e.user_id + "'");
    if (e.kind == InteractionKind::follow) {
        if (!stores_.users.count(e.target_id)) throw NotFoundError("unknown user '" + e.target_id + "'");
        if (e.target_id == e.user_id) throw ContractError("a user cannot follow themselves");
    } else if (!stores_.ootds.count(e.target_id)) {
        throw NotFoundError("unknown OOTD '" + e.target_id + "'");
    }
}

void Engine::apply_interaction(const InteractionEvent& e) {
    stores_.events.push_back(e);
    snap_.rec->apply_interaction(e);
}

void Engine::apply_item(const ItemRecord& item) { stores_.items[item.item_id] = item; }

void Engine::apply_ootd(const OotdPost& o, const std::vector<ItemRecord>& items) {
    for (const auto& it : items) stores_.items[it.item_id] = it;
    stores_.ootds[o.ootd_id] = o;
    snap_.rec->add_ootd(o, items);
    apply_interaction({o.created_at, o.uploader_id, InteractionKind::upload, o.ootd_id});
}

Versioned<InteractionEvent> Engine::record_interaction(const UserId& u, InteractionKind kind,
                                                       const std::string& target, std::optional<Timestamp> at) {
    if (kind == InteractionKind::upload) throw ContractError("uploads are recorded through OOTD upload");
    std::lock_guard w(writer_mu_);
    InteractionEvent e;
    {
        std::shared_lock lock(state_mu_);
        e = {at.value_or(snap_.rec->now()), u, kind, target};
        validate_interaction(e);
    }
    journal_->append({{"op", "interaction"}, {"event", interaction_to_json(e)}});
    std::unique_lock lock(state_mu_);
    apply_interaction(e);
    return {snap_.version, e};
}

Versioned<ItemId> Engine::ingest_item(ItemRecord item) {
    std::lock_guard w(writer_mu_);
    {
        std::shared_lock lock(state_mu_);
        if (item.item_id == 0) item.item_id = stores_.items.empty() ? 1 : stores_.items.rbegin()->first + 1;
        if (stores_.items.count(item.item_id)) {
            throw ContractError("item " + std::to_string(item.item_id) + " already exists");
        }
    }
    validate_item(item, hierarchy_, cfg_.dims);
    journal_->append({{"op", "item"}, {"item", item_to_json(item, true)}});
    std::unique_lock lock(state_mu_);
    apply_item(item);
    return {snap_.version, item.item_id};
}

UploadResult Engine::upload_ootd(const UploadRequest& req) {
    if (req.image.empty()) throw ContractError("upload has no image");
    std::lock_guard w(writer_mu_);
    PipelineOptions opts;
    opts.workers = cfg_.pipeline_workers;
    opts.iou_threshold = cfg_.iou_threshold;
    auto analyzed = run_ootd_pipeline(req.image, plugins_, hierarchy_, opts);

    UploadResult res;
    res.errors = analyzed.errors;
    Timestamp created{};
    {
        std::shared_lock lock(state_mu_);
        if (!stores_.users.count(req.user_id)) throw NotFoundError("unknown user '" + req.user_id + "'");
        OotdId id;
        if (req.ootd_id) {
            id = *req.ootd_id;
            if (id.empty()) throw ContractError("ootd_id must not be empty");
            if (stores_.ootds.count(id)) throw ContractError("OOTD '" + id + "' already exists");
        } else {
            for (std::size_t n = stores_.ootds.size() + 1;; ++n) {
                id = "up" + std::to_string(n);
                if (!stores_.ootds.count(id)) break;
            }
        }
        ItemId next = stores_.items.empty() ? 1 : stores_.items.rbegin()->first + 1;
        for (const auto& c : analyzed.crops) {
            if (c.embedding.empty()) continue;
            ItemRecord it;
            it.item_id = next++;
            it.sub_category = c.classification.sub_category;
            it.color_tag = c.tags.color;
            it.attribute_tags = c.tags.attributes;
            it.classifier_embedding = c.classification.representation.size() == cfg_.dims.classifier
                                          ? c.classification.representation
                                          : std::vector<float>(cfg_.dims.classifier, 0.0f);
            it.tagger_embedding = c.tags.representation.size() == cfg_.dims.tagger
                                      ? c.tags.representation
                                      : std::vector<float>(cfg_.dims.tagger, 0.0f);
            it.search_embedding = c.embedding;
            validate_item(it, hierarchy_, cfg_.dims);
            res.items.push_back(std::move(it));
        }
        if (res.items.empty()) throw ContractError("upload produced no indexable crops");
        created = req.created_at.value_or(snap_.rec->now());
        std::vector<ItemId> ids;
        for (const auto& it : res.items) ids.push_back(it.item_id);
        res.ootd = make_ootd(id, req.user_id, std::move(ids), req.hashtags, created);
    }
    json items = json::array();
    for (const auto& it : res.items) items.push_back(item_to_json(it, true));
    journal_->append({{"op", "ootd"}, {"ootd", ootd_to_json(res.ootd)}, {"items", items}});
    std::unique_lock lock(state_mu_);
    apply_ootd(res.ootd, res.items);
    res.snapshot_version = snap_.version;
    return res;
}

CatalogHandle::RebuildOutcome Engine::rebuild() {
    std::lock_guard w(writer_mu_);
    Timestamp now;
    {
        std::shared_lock lock(state_mu_);
        now = std::max(snap_.rec->now(), newest_data_time());
    }
    journal_->append({{"op", "rebuild"}, {"now", format_iso8601(now)}});
    return rebuild_at(now);
}

CatalogHandle::RebuildOutcome Engine::rebuild_at(Timestamp now) {
    RecInputs in;
    GroupedVectors grouped;
    std::shared_ptr<const IndexCatalog> old;
    std::uint64_t version = 0;
    std::size_t n_items = 0;
    {
        std::shared_lock lock(state_mu_);
        for (const auto& [_, it] : stores_.items) in.items.push_back(it);
        for (const auto& [_, o] : stores_.ootds) in.ootds.push_back(o);
        for (const auto& [_, u] : stores_.users) in.users.push_back(u);
        in.events = stores_.events;
        grouped = grouped_vectors(stores_.items);
        old = snap_.catalog;
        version = snap_.version;
        n_items = stores_.items.size();
    }
    in.now = now;

    CatalogHandle::RebuildOutcome out;
    std::unique_ptr<Recommender> rec;
    std::shared_ptr<IndexCatalog> catalog;
    try {
        catalog = std::make_shared<IndexCatalog>(rebuild_catalog(*old, grouped, cfg_.catalog, now));
        rec = std::make_unique<Recommender>(std::move(in), cfg_.rec);
    } catch (const BuildError& e) {
        out.error = e.what();
        out.rejected_ids = e.rejected_ids();
        out.version = version;
        return out;
    } catch (const std::exception& e) {
        out.error = e.what();
        out.version = version;
        return out;
    }
    catalog->set_version(version + 1);

    std::unique_lock lock(state_mu_);
    snap_.version = version + 1;
    snap_.rec = std::move(rec);
    snap_.catalog = std::move(catalog);
    indexed_ = n_items;
    out.ok = true;
    out.version = snap_.version;
    return out;
}

void Engine::replay(const json& record) {
    const auto op = record.value("op", "");
    if (op == "interaction") {
        const auto e = interaction_from_json(record.at("event"));
        validate_interaction(e);
        apply_interaction(e);
    } else if (op == "item") {
        apply_item(item_from_json(record.at("item")));
    } else if (op == "ootd") {
        std::vector<ItemRecord> items;
        for (const auto& j : record.at("items")) items.push_back(item_from_json(j));
        apply_ootd(ootd_from_json(record.at("ootd")), items);
    } else if (op == "rebuild") {
        rebuild_at(parse_iso8601(record.at("now").get<std::string>()));
    } else {
        throw ParseError("journal: unknown op '" + op + "'", 0);
    }
}

}  // namespace itoo
