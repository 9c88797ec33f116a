#include "evr/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include "evr/errors.hpp"
#include "evr/parallel.hpp"
#include "evr/sha256.hpp"
#include "nlohmann/json.hpp"

namespace evr {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Frame sampling and reference conventions
// ---------------------------------------------------------------------------

std::vector<std::size_t> sample_frames_uniform(std::size_t total_frames, std::size_t k) {
    if (total_frames == 0) throw InvalidInputError("sample_frames_uniform: empty video");
    if (k == 0) throw InvalidInputError("sample_frames_uniform: k must be >= 1");
    std::vector<std::size_t> out;
    if (total_frames <= k) {
        out.resize(total_frames);
        for (std::size_t i = 0; i < total_frames; ++i) out[i] = i;
        return out;
    }
    out.resize(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = i * total_frames / k;
    return out;
}

std::string make_frame_ref(const std::string& video_id, std::size_t frame_index) {
    return video_id + "#" + std::to_string(frame_index);
}

// ---------------------------------------------------------------------------
// Config loading
// ---------------------------------------------------------------------------

namespace {

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

ChatEndpointConfig parse_chat_endpoint(const json& j, const ChatEndpointConfig& defaults) {
    ChatEndpointConfig c = defaults;
    if (j.contains("base_url")) c.base_url = j.at("base_url").get<std::string>();
    if (j.contains("model")) c.model_name = j.at("model").get<std::string>();
    if (j.contains("temperature")) c.temperature = j.at("temperature").get<double>();
    if (j.contains("top_p")) c.top_p = j.at("top_p").get<double>();
    if (j.contains("max_retries")) c.max_retries = j.at("max_retries").get<int>();
    if (j.contains("timeout_ms")) {
        c.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<int>());
    }
    return c;
}

AggregationRule parse_rule(const json& j, const std::string& kind_key,
                           const std::string& top_k_key) {
    AggregationRule rule;
    if (j.contains(kind_key)) rule.kind = aggregate_from_name(j.at(kind_key).get<std::string>());
    if (j.contains(top_k_key)) rule.top_k = j.at(top_k_key).get<std::size_t>();
    return rule;
}

AggregationPolicy parse_policy(const json& j) {
    AggregationPolicy policy;
    policy.over_events = parse_rule(j, "over_events", "events_top_k");
    policy.over_captions = parse_rule(j, "over_captions", "captions_top_k");
    return policy;
}

AblationGrid parse_ablation_grid(const json& j) {
    AblationGrid grid;
    if (j.contains("fusion")) {
        for (const auto& name : j.at("fusion")) {
            grid.fusion_methods.push_back(fusion_method_from_name(name.get<std::string>()));
        }
    }
    if (j.contains("drop_components")) {
        for (const auto& set : j.at("drop_components")) {
            std::vector<ComponentKind> drops;
            for (const auto& name : set) {
                drops.push_back(component_kind_from_name(name.get<std::string>()));
            }
            grid.component_drops.push_back(std::move(drops));
        }
    }
    if (j.contains("aggregation")) {
        for (const auto& p : j.at("aggregation")) grid.policies.push_back(parse_policy(p));
    }
    return grid;
}

}  // namespace

AblationGrid default_ablation_grid() {
    AblationGrid grid;
    grid.fusion_methods = all_fusion_methods();
    grid.component_drops = {
        {},
        {ComponentKind::QueryVideo},
        {ComponentKind::QueryDesc},
        {ComponentKind::PrequelDesc, ComponentKind::CurrentDesc, ComponentKind::SequelDesc},
    };
    return grid;
}

RunConfig load_run_config(const std::filesystem::path& config_file) {
    json j = json::parse(read_text_file(config_file), nullptr, false);
    if (j.is_discarded()) throw ConfigError("invalid JSON in " + config_file.string());
    const auto base = std::filesystem::absolute(config_file).parent_path();

    RunConfig c;
    try {
        c.manifest = resolve_path(base, j.at("manifest").get<std::string>());
        if (j.contains("work_dir")) {
            c.work_dir = resolve_path(base, j.at("work_dir").get<std::string>());
        } else {
            c.work_dir = base / "work";
        }
        c.prompt_dir = resolve_path(base, j.at("prompt_dir").get<std::string>());

        if (j.contains("frame_count")) c.frame_count = j.at("frame_count").get<std::size_t>();
        if (j.contains("use_asr")) c.use_asr = j.at("use_asr").get<bool>();
        if (j.contains("use_asr_translation")) {
            c.transcribe.use_asr_translation = j.at("use_asr_translation").get<bool>();
        }
        if (j.contains("use_translator")) {
            c.transcribe.use_translator = j.at("use_translator").get<bool>();
        }
        if (j.contains("use_refiner")) {
            c.transcribe.use_refiner = j.at("use_refiner").get<bool>();
        }
        if (j.contains("use_refined_events")) {
            c.use_refined_events = j.at("use_refined_events").get<bool>();
        }
        if (j.contains("aggregation")) c.aggregation = parse_policy(j.at("aggregation"));
        if (j.contains("fusion")) {
            c.fusion = fusion_method_from_name(j.at("fusion").get<std::string>());
        }
        if (j.contains("rrf_rank_constant")) {
            c.rrf_rank_constant = j.at("rrf_rank_constant").get<double>();
        }
        if (j.contains("metric_ks")) {
            c.metric_ks.clear();
            for (const auto& k : j.at("metric_ks")) c.metric_ks.push_back(k.get<std::size_t>());
        }
        if (j.contains("ndcg_k")) c.ndcg_k = j.at("ndcg_k").get<std::size_t>();
        if (j.contains("group_by")) {
            c.group_by = group_by_from_name(j.at("group_by").get<std::string>());
        }
        if (j.contains("rank_aggregation")) {
            const auto name = j.at("rank_aggregation").get<std::string>();
            if (name == "first_relevant") {
                c.rank_aggregation = RankAggregation::FirstRelevant;
            } else if (name == "mean_over_relevant") {
                c.rank_aggregation = RankAggregation::MeanOverRelevant;
            } else {
                throw ConfigError("unknown rank_aggregation: " + name);
            }
        }
        if (j.contains("drop_components")) {
            for (const auto& name : j.at("drop_components")) {
                c.drop_components.push_back(
                    component_kind_from_name(name.get<std::string>()));
            }
        }
        if (j.contains("mode")) {
            const auto mode = j.at("mode").get<std::string>();
            if (mode == "replay") {
                c.mode = RunMode::Replay;
            } else if (mode == "live") {
                c.mode = RunMode::Live;
            } else {
                throw ConfigError("unknown mode: " + mode);
            }
        }
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("workers")) c.workers = j.at("workers").get<std::size_t>();

        if (j.contains("endpoints")) {
            const auto& e = j.at("endpoints");
            if (e.contains("chat")) {
                c.endpoints.chat = parse_chat_endpoint(e.at("chat"), c.endpoints.chat);
            }
            if (e.contains("vision")) {
                c.endpoints.vision = parse_chat_endpoint(e.at("vision"), c.endpoints.vision);
            }
            if (e.contains("asr")) {
                const auto& a = e.at("asr");
                if (a.contains("base_url")) c.endpoints.asr_base_url = a.at("base_url");
                if (a.contains("model")) c.endpoints.asr_model = a.at("model");
            }
            if (e.contains("translate")) {
                const auto& t = e.at("translate");
                if (t.contains("base_url")) c.endpoints.translate_base_url = t.at("base_url");
                if (t.contains("model")) c.endpoints.translate_model = t.at("model");
            }
            if (e.contains("embeddings")) {
                const auto& emb = e.at("embeddings");
                if (emb.contains("base_url")) c.endpoints.embed_base_url = emb.at("base_url");
                if (emb.contains("model")) c.endpoints.embed_model = emb.at("model");
            }
        }
        if (j.contains("replay")) {
            const auto& r = j.at("replay");
            if (r.contains("chat")) c.replay.chat = resolve_path(base, r.at("chat"));
            if (r.contains("embeddings")) {
                c.replay.embeddings = resolve_path(base, r.at("embeddings"));
            }
            if (r.contains("asr")) c.replay.asr = resolve_path(base, r.at("asr"));
            if (r.contains("translate")) c.replay.translate = resolve_path(base, r.at("translate"));
        }
        if (j.contains("record_dir")) {
            c.record_dir = resolve_path(base, j.at("record_dir").get<std::string>());
        }
        if (j.contains("ablate")) c.ablate = parse_ablation_grid(j.at("ablate"));
    } catch (const json::exception& e) {
        throw ConfigError("config " + config_file.string() + ": " + e.what());
    }

    validate_config(c);
    return c;
}

void validate_config(const RunConfig& config) {
    if (config.frame_count < 1) throw ConfigError("frame_count must be >= 1");
    if (config.workers < 1) throw ConfigError("workers must be >= 1");
    if (config.metric_ks.empty()) throw ConfigError("metric_ks must be non-empty");
    for (std::size_t k : config.metric_ks) {
        if (k < 1) throw ConfigError("metric_ks entries must be >= 1");
    }
    if (config.mode == RunMode::Replay) {
        if (config.replay.chat.empty() || config.replay.embeddings.empty()) {
            throw ConfigError("replay mode requires chat and embeddings replay stores");
        }
        if (config.use_asr &&
            (config.replay.asr.empty() || config.replay.translate.empty())) {
            throw ConfigError("replay mode with use_asr requires asr and translate stores");
        }
    }
}

// ---------------------------------------------------------------------------
// Stage cache: content-addressed JSON blobs under work_dir/cache
// ---------------------------------------------------------------------------

namespace {

class StageCache {
  public:
    explicit StageCache(std::filesystem::path root) : root_(std::move(root)) {}

    std::optional<json> get(const std::string& stage, const std::string& key) const {
        const auto path = root_ / stage / (key + ".json");
        if (!std::filesystem::exists(path)) return std::nullopt;
        json j = json::parse(read_text_file(path), nullptr, false);
        if (j.is_discarded()) return std::nullopt;  // corrupt entries recompute
        return j;
    }

    void put(const std::string& stage, const std::string& key, const json& value) const {
        write_text_file(root_ / stage / (key + ".json"), value.dump(2) + "\n");
    }

  private:
    std::filesystem::path root_;
};

std::string joined_key(std::initializer_list<std::string> parts) {
    std::string joined;
    for (const auto& p : parts) {
        joined += p;
        joined += '\x1f';
    }
    return sha256_hex(joined);
}

json decomposition_to_json(const DecompositionArtifact& a) {
    json j;
    j["query_id"] = a.query_id;
    j["prequel"] = a.decomposition.prequel;
    j["current"] = a.decomposition.current;
    j["sequel"] = a.decomposition.sequel;
    if (a.decomposition.primary_event) j["primary_event"] = *a.decomposition.primary_event;
    if (a.decomposition.place) j["place"] = *a.decomposition.place;
    if (a.decomposition.time) j["time"] = *a.decomposition.time;
    j["refined_prequel"] = a.decomposition.refined_prequel;
    j["refined_current"] = a.decomposition.refined_current;
    j["refined_sequel"] = a.decomposition.refined_sequel;
    json failed = json::array();
    for (EventKind kind : a.failed_kinds) failed.push_back(event_kind_name(kind));
    j["failed_kinds"] = failed;
    return j;
}

DecompositionArtifact decomposition_from_json(const json& j) {
    DecompositionArtifact a;
    a.query_id = j.at("query_id").get<std::string>();
    auto read_list = [&](const char* key) {
        std::vector<std::string> out;
        for (const auto& s : j.at(key)) out.push_back(s.get<std::string>());
        return out;
    };
    a.decomposition.prequel = read_list("prequel");
    a.decomposition.current = read_list("current");
    a.decomposition.sequel = read_list("sequel");
    if (j.contains("primary_event")) a.decomposition.primary_event = j.at("primary_event");
    if (j.contains("place")) a.decomposition.place = j.at("place");
    if (j.contains("time")) a.decomposition.time = j.at("time");
    a.decomposition.refined_prequel = read_list("refined_prequel");
    a.decomposition.refined_current = read_list("refined_current");
    a.decomposition.refined_sequel = read_list("refined_sequel");
    for (const auto& name : j.at("failed_kinds")) {
        const std::string s = name.get<std::string>();
        if (s == "prequel") a.failed_kinds.push_back(EventKind::Prequel);
        if (s == "current") a.failed_kinds.push_back(EventKind::Current);
        if (s == "sequel") a.failed_kinds.push_back(EventKind::Sequel);
    }
    return a;
}

json transcript_to_json(const TranscriptArtifact& t) {
    json j;
    j["video_id"] = t.video_id;
    if (t.original) j["original"] = *t.original;
    if (t.refined) j["refined"] = *t.refined;
    return j;
}

TranscriptArtifact transcript_from_json(const json& j) {
    TranscriptArtifact t;
    t.video_id = j.at("video_id").get<std::string>();
    if (j.contains("original")) t.original = j.at("original");
    if (j.contains("refined")) t.refined = j.at("refined");
    return t;
}

json matrix_to_json(const ScoreComponentMatrix& m,
                    const std::vector<VideoScoreError>& errors) {
    json j;
    j["query_id"] = m.query_id;
    j["video_order"] = m.video_order;
    json comps = json::object();
    for (const auto& [kind, values] : m.components) {
        comps[component_kind_name(kind)] = values;
    }
    j["components"] = comps;
    json errs = json::array();
    for (const auto& e : errors) {
        errs.push_back({{"video_id", e.video_id}, {"reason", e.reason}});
    }
    j["video_errors"] = errs;
    return j;
}

std::pair<ScoreComponentMatrix, std::vector<VideoScoreError>> matrix_from_json(const json& j) {
    ScoreComponentMatrix m;
    m.query_id = j.at("query_id").get<std::string>();
    for (const auto& v : j.at("video_order")) m.video_order.push_back(v.get<std::string>());
    for (const auto& [name, values] : j.at("components").items()) {
        std::vector<double> vec;
        for (const auto& x : values) vec.push_back(x.get<double>());
        m.components[component_kind_from_name(name)] = std::move(vec);
    }
    std::vector<VideoScoreError> errors;
    for (const auto& e : j.at("video_errors")) {
        errors.push_back({e.at("video_id").get<std::string>(),
                          e.at("reason").get<std::string>()});
    }
    return {std::move(m), std::move(errors)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Fusion over matrices and ranking serialization
// ---------------------------------------------------------------------------

std::vector<RankingArtifact> fuse_matrices(std::span<const ScoreComponentMatrix> matrices,
                                           FusionMethod method,
                                           std::span<const ComponentKind> drops,
                                           double rrf_rank_constant) {
    std::vector<RankingArtifact> out;
    out.reserve(matrices.size());
    for (const auto& m : matrices) {
        std::vector<ComponentDistribution> dists;
        for (const auto& [kind, scores] : m.components) {
            const bool dropped =
                std::find(drops.begin(), drops.end(), kind) != drops.end();
            if (!dropped) dists.push_back(softmax_over_videos(scores));
        }
        if (dists.empty()) {
            throw InvalidInputError("fuse_matrices: every component dropped for query " +
                                    m.query_id);
        }
        RankingArtifact artifact;
        artifact.fused = fuse(method, dists, m.video_order, m.query_id, rrf_rank_constant);
        artifact.video_order = m.video_order;
        out.push_back(std::move(artifact));
    }
    return out;
}

std::string rankings_to_jsonl(std::span<const RankingArtifact> rankings) {
    std::string out;
    for (const auto& r : rankings) {
        json j;
        j["query_id"] = r.fused.query_id;
        json videos = json::array();
        json scores = json::array();
        for (std::size_t idx : r.fused.ranking) {
            videos.push_back(r.video_order[idx]);
            scores.push_back(r.fused.scores[idx]);
        }
        j["videos"] = videos;
        j["scores"] = scores;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<RankingArtifact> rankings_from_jsonl(const std::string& text) {
    std::vector<RankingArtifact> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError("bad ranking record");
        RankingArtifact r;
        r.fused.query_id = j.at("query_id").get<std::string>();
        for (const auto& v : j.at("videos")) r.video_order.push_back(v.get<std::string>());
        for (const auto& s : j.at("scores")) r.fused.scores.push_back(s.get<double>());
        r.fused.ranking.resize(r.video_order.size());
        for (std::size_t i = 0; i < r.fused.ranking.size(); ++i) r.fused.ranking[i] = i;
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

Pipeline::Pipeline(RunConfig config, const Clients* injected)
    : config_(std::move(config)),
      corpus_(load_corpus(config_.manifest)),
      prompts_(PromptLibrary::load_dir(config_.prompt_dir)),
      call_log_(std::make_shared<CallLog>()) {
    const bool record = config_.record_dir.has_value();

    ChatClient* chat = injected ? injected->chat : nullptr;
    if (!chat) {
        if (config_.mode == RunMode::Replay) {
            owned_chat_ = std::make_unique<ReplayChatClient>(
                config_.replay.chat, config_.endpoints.chat.model_name);
        } else {
            owned_chat_ = std::make_unique<HttpChatClient>(config_.endpoints.chat);
        }
        chat = owned_chat_.get();
    }
    if (record) {
        recording_chat_ = std::make_unique<RecordingChatClient>(
            *chat, *config_.record_dir / "chat.jsonl");
        chat = recording_chat_.get();
    }
    chat_ = chat;

    ChatClient* vision = injected ? injected->vision : nullptr;
    if (!vision) {
        if (config_.mode == RunMode::Replay) {
            owned_vision_ = std::make_unique<ReplayChatClient>(
                config_.replay.chat, config_.endpoints.vision.model_name);
        } else {
            owned_vision_ = std::make_unique<HttpChatClient>(config_.endpoints.vision);
        }
        vision = owned_vision_.get();
    }
    if (record && vision != chat_) {
        recording_vision_ = std::make_unique<RecordingChatClient>(
            *vision, *config_.record_dir / "chat.jsonl");
        vision = recording_vision_.get();
    }
    vision_ = vision;

    if (config_.use_asr) {
        AsrClient* asr = injected ? injected->asr : nullptr;
        if (!asr) {
            if (config_.mode == RunMode::Replay) {
                owned_asr_ = std::make_unique<ReplayAsrClient>(config_.replay.asr,
                                                               config_.endpoints.asr_model);
            } else {
                owned_asr_ = std::make_unique<HttpAsrClient>(config_.endpoints.asr_base_url,
                                                             config_.endpoints.asr_model);
            }
            asr = owned_asr_.get();
        }
        if (record) {
            recording_asr_ =
                std::make_unique<RecordingAsrClient>(*asr, *config_.record_dir / "asr.jsonl");
            asr = recording_asr_.get();
        }
        asr_ = asr;

        TranslationClient* translate = injected ? injected->translate : nullptr;
        if (!translate) {
            if (config_.mode == RunMode::Replay) {
                owned_translate_ = std::make_unique<ReplayTranslationClient>(
                    config_.replay.translate, config_.endpoints.translate_model);
            } else {
                owned_translate_ = std::make_unique<HttpTranslationClient>(
                    config_.endpoints.translate_base_url, config_.endpoints.translate_model);
            }
            translate = owned_translate_.get();
        }
        if (record) {
            recording_translate_ = std::make_unique<RecordingTranslationClient>(
                *translate, *config_.record_dir / "translate.jsonl");
            translate = recording_translate_.get();
        }
        translate_ = translate;
    }

    EmbeddingProvider* embeddings = injected ? injected->embeddings : nullptr;
    if (!embeddings) {
        if (config_.mode == RunMode::Replay) {
            owned_embeddings_ =
                std::make_unique<ReplayEmbeddingProvider>(config_.replay.embeddings);
        } else {
            owned_embeddings_ = std::make_unique<HttpEmbeddingProvider>(
                config_.endpoints.embed_base_url, config_.endpoints.embed_model);
        }
        embeddings = owned_embeddings_.get();
    }
    if (record) {
        recording_embeddings_ = std::make_unique<RecordingEmbeddingProvider>(
            *embeddings, *config_.record_dir / "embeddings.jsonl");
        embeddings = recording_embeddings_.get();
    }
    embeddings_ = embeddings;

    chat_->set_call_log(call_log_);
    vision_->set_call_log(call_log_);
}

std::vector<Violation> Pipeline::validate() const {
    return validate_corpus(corpus_);
}

std::vector<DecompositionArtifact> Pipeline::stage_decompose() {
    StageCache cache(config_.work_dir / "cache");
    const std::string template_shas =
        prompts_.get("decompose_prequel").sha + prompts_.get("decompose_current").sha +
        prompts_.get("decompose_sequel").sha + prompts_.get("extract_primary_event").sha +
        prompts_.get("extract_location").sha + prompts_.get("extract_temporal").sha +
        prompts_.get("refine_query").sha;

    std::vector<DecompositionArtifact> artifacts(corpus_.queries.size());
    const std::size_t workers = chat_->thread_safe() ? config_.workers : 1;

    parallel_for(corpus_.queries.size(), workers, [&](std::size_t qi) {
        const QueryRecord& query = corpus_.queries[qi];
        const std::string key = joined_key({"decompose", query.text, template_shas,
                                            chat_->model()});
        if (auto cached = cache.get("decompose", key)) {
            artifacts[qi] = decomposition_from_json(*cached);
            artifacts[qi].query_id = query.id;  // keys are text-based; ids may differ
            return;
        }

        DecompositionArtifact artifact;
        artifact.query_id = query.id;
        EventDecomposition& d = artifact.decomposition;
        for (EventKind kind : {EventKind::Prequel, EventKind::Current, EventKind::Sequel}) {
            try {
                auto events = decompose_events(query.text, kind, prompts_, *chat_,
                                               &diagnostics_);
                if (kind == EventKind::Prequel) d.prequel = events;
                if (kind == EventKind::Current) d.current = events;
                if (kind == EventKind::Sequel) d.sequel = events;
            } catch (const ReplayMissError&) {
                throw;
            } catch (const Error& e) {
                // parse or endpoint failure: this kind is skipped and the
                // query scored from the remaining components
                artifact.failed_kinds.push_back(kind);
                diagnostics_.warn("decompose: query " + query.id + ": " + e.what());
            }
        }

        if (!d.prequel.empty() || !d.current.empty() || !d.sequel.empty()) {
            Facets facets = extract_facets(query.text, prompts_, *chat_, &diagnostics_);
            d.primary_event = facets.primary_event;
            d.place = facets.place;
            d.time = facets.time;
            auto refine_list = [&](const std::vector<std::string>& events) {
                std::vector<std::string> refined;
                refined.reserve(events.size());
                for (const auto& e : events) {
                    refined.push_back(refine_event(e, facets, prompts_, *chat_, &diagnostics_));
                }
                return refined;
            };
            d.refined_prequel = refine_list(d.prequel);
            d.refined_current = refine_list(d.current);
            d.refined_sequel = refine_list(d.sequel);
        }

        cache.put("decompose", key, decomposition_to_json(artifact));
        artifacts[qi] = std::move(artifact);
    });

    json out = json::array();
    for (const auto& a : artifacts) out.push_back(decomposition_to_json(a));
    write_text_file(config_.work_dir / "decompositions.json", out.dump(2) + "\n");
    return artifacts;
}

std::vector<TranscriptArtifact> Pipeline::stage_transcribe() {
    std::vector<TranscriptArtifact> artifacts;
    if (!config_.use_asr) {
        write_text_file(config_.work_dir / "transcripts.json", "[]\n");
        return artifacts;
    }

    StageCache cache(config_.work_dir / "cache");
    const std::string refine_sha = prompts_.get("transcript_refine").sha;
    const std::string flags = std::string(config_.transcribe.use_asr_translation ? "1" : "0") +
                              (config_.transcribe.use_translator ? "1" : "0") +
                              (config_.transcribe.use_refiner ? "1" : "0");

    std::vector<const VideoRecord*> audio_videos;
    for (const auto& v : corpus_.videos) {
        if (v.has_audio) audio_videos.push_back(&v);
    }
    artifacts.resize(audio_videos.size());

    const bool safe = chat_->thread_safe();
    parallel_for(audio_videos.size(), safe ? config_.workers : 1, [&](std::size_t i) {
        const VideoRecord& video = *audio_videos[i];
        const std::string key =
            joined_key({"transcribe", video.id, asr_->model(),
                        translate_ ? translate_->model() : "", chat_->model(), refine_sha,
                        flags});
        if (auto cached = cache.get("transcribe", key)) {
            artifacts[i] = transcript_from_json(*cached);
            return;
        }

        TranscriptArtifact artifact;
        artifact.video_id = video.id;
        std::optional<AsrResult> asr_result = asr_->transcribe(video.id);
        if (asr_result) {
            artifact.original = asr_result->original_text;
            artifact.refined = refine_transcript(*asr_result, translate_, chat_, prompts_,
                                                 config_.transcribe, &diagnostics_);
        } else {
            diagnostics_.warn("transcribe: video " + video.id + ": ASR unavailable");
        }
        cache.put("transcribe", key, transcript_to_json(artifact));
        artifacts[i] = std::move(artifact);
    });

    json out = json::array();
    for (const auto& t : artifacts) out.push_back(transcript_to_json(t));
    write_text_file(config_.work_dir / "transcripts.json", out.dump(2) + "\n");
    return artifacts;
}

std::vector<DescriptionSet> Pipeline::stage_describe(
    const std::vector<TranscriptArtifact>& transcripts) {
    StageCache cache(config_.work_dir / "cache");
    std::map<std::string, const TranscriptArtifact*> transcript_by_video;
    for (const auto& t : transcripts) transcript_by_video[t.video_id] = &t;

    std::vector<DescriptionSet> sets(corpus_.videos.size());
    const bool safe = chat_->thread_safe() && vision_->thread_safe();

    parallel_for(corpus_.videos.size(), safe ? config_.workers : 1, [&](std::size_t vi) {
        const VideoRecord& video = corpus_.videos[vi];
        std::optional<std::string> asr_context;
        std::optional<std::string> refined;
        if (auto it = transcript_by_video.find(video.id); it != transcript_by_video.end()) {
            asr_context = it->second->original;
            refined = it->second->refined;
        }

        const PromptTemplate& caption_tpl =
            prompts_.get(asr_context ? "frame_caption_asr" : "frame_caption");
        const PromptTemplate& summary_tpl =
            prompts_.get(asr_context ? "video_summary_asr" : "video_summary");
        const std::string key = joined_key(
            {"describe", video.id, std::to_string(video.frame_count),
             std::to_string(config_.frame_count), caption_tpl.sha, summary_tpl.sha,
             vision_->model(), chat_->model(),
             asr_context ? sha256_hex(*asr_context) : "none",
             refined ? sha256_hex(*refined) : "none"});

        if (auto cached = cache.get("describe", key)) {
            DescriptionSet d;
            d.video_id = cached->at("video_id").get<std::string>();
            for (const auto& cpt : cached->at("frame_captions")) {
                d.frame_captions.push_back(cpt.get<std::string>());
            }
            if (cached->contains("video_caption")) d.video_caption = cached->at("video_caption");
            if (cached->contains("transcript")) d.transcript = cached->at("transcript");
            sets[vi] = std::move(d);
            return;
        }

        DescriptionSet d;
        d.video_id = video.id;
        const auto indices = sample_frames_uniform(
            static_cast<std::size_t>(video.frame_count), config_.frame_count);
        std::optional<std::string> prev;
        for (std::size_t idx : indices) {
            auto caption = caption_frame(make_frame_ref(video.id, idx), prev, asr_context,
                                         prompts_, *vision_, &diagnostics_);
            if (caption && !caption->empty()) {
                d.frame_captions.push_back(*caption);
                prev = caption;
            } else {
                prev = std::nullopt;
            }
        }
        if (!d.frame_captions.empty()) {
            try {
                d.video_caption = summarize_video(d.frame_captions, asr_context, prompts_,
                                                  *chat_, &diagnostics_);
            } catch (const ReplayMissError&) {
                throw;
            } catch (const Error& e) {
                diagnostics_.warn("describe: video " + video.id + ": summary failed: " +
                                  e.what());
            }
        }
        d.transcript = refined;

        json cached;
        cached["video_id"] = d.video_id;
        cached["frame_captions"] = d.frame_captions;
        if (d.video_caption) cached["video_caption"] = *d.video_caption;
        if (d.transcript) cached["transcript"] = *d.transcript;
        cache.put("describe", key, cached);
        sets[vi] = std::move(d);
    });

    save_descriptions_json(config_.work_dir / "descriptions.json", sets);
    return sets;
}

std::vector<ScoreComponentMatrix> Pipeline::stage_score(
    const std::vector<DecompositionArtifact>& decompositions,
    const std::vector<DescriptionSet>& descriptions,
    const AggregationPolicy* policy_override) {
    StageCache cache(config_.work_dir / "cache");
    const AggregationPolicy policy = policy_override ? *policy_override : config_.aggregation;

    std::map<std::string, const DecompositionArtifact*> decomposition_by_query;
    for (const auto& d : decompositions) decomposition_by_query[d.query_id] = &d;

    std::string descriptions_blob;
    for (const auto& d : descriptions) {
        descriptions_blob += d.video_id;
        descriptions_blob += '\x1f';
        for (const auto& c : d.frame_captions) {
            descriptions_blob += c;
            descriptions_blob += '\x1f';
        }
        if (d.video_caption) descriptions_blob += *d.video_caption;
        descriptions_blob += '\x1f';
        if (d.transcript) descriptions_blob += *d.transcript;
        descriptions_blob += '\x1e';
    }
    const std::string descriptions_sha = sha256_hex(descriptions_blob);

    std::vector<ScoreComponentMatrix> matrices(corpus_.queries.size());
    const std::size_t workers = embeddings_->thread_safe() ? config_.workers : 1;

    parallel_for(corpus_.queries.size(), workers, [&](std::size_t qi) {
        const QueryRecord& query = corpus_.queries[qi];
        auto dit = decomposition_by_query.find(query.id);
        if (dit == decomposition_by_query.end()) {
            throw InvalidInputError("stage_score: no decomposition for query " + query.id);
        }
        const EventDecomposition& decomposition = dit->second->decomposition;

        ScoreMatrixOptions options;
        options.policy = policy;
        options.use_refined_events = config_.use_refined_events;
        options.workers = 1;  // queries are already parallel
        options.components = {ComponentKind::QueryVideo, ComponentKind::QueryDesc};
        auto events_available = [&](EventKind kind) {
            const auto& list = config_.use_refined_events ? decomposition.refined(kind)
                                                          : decomposition.events(kind);
            return !list.empty();
        };
        if (events_available(EventKind::Prequel)) {
            options.components.push_back(ComponentKind::PrequelDesc);
        }
        if (events_available(EventKind::Current)) {
            options.components.push_back(ComponentKind::CurrentDesc);
        }
        if (events_available(EventKind::Sequel)) {
            options.components.push_back(ComponentKind::SequelDesc);
        }

        std::string component_names;
        for (ComponentKind kind : options.components) {
            component_names += component_kind_name(kind);
            component_names += ',';
        }
        const std::string key = joined_key(
            {"score", query.id, query.text,
             decomposition_to_json(*dit->second).dump(), descriptions_sha,
             policy_label(policy), config_.use_refined_events ? "refined" : "raw",
             config_.endpoints.embed_model, component_names});

        if (auto cached = cache.get("score", key)) {
            auto [matrix, errors] = matrix_from_json(*cached);
            for (const auto& e : errors) {
                diagnostics_.warn("score: query " + query.id + " video " + e.video_id +
                                  ": " + e.reason);
            }
            matrices[qi] = std::move(matrix);
            return;
        }

        ScoreMatrixResult result = build_score_matrix(query, decomposition, corpus_.videos,
                                                      descriptions, *embeddings_, options);
        for (const auto& e : result.video_errors) {
            diagnostics_.warn("score: query " + query.id + " video " + e.video_id + ": " +
                              e.reason);
        }
        cache.put("score", key, matrix_to_json(result.matrix, result.video_errors));
        matrices[qi] = std::move(result.matrix);
    });

    if (!policy_override) {
        save_score_matrices(config_.work_dir / "matrices.bin",
                            config_.work_dir / "matrices_index.json", matrices);
        std::string tsv;
        for (const auto& m : matrices) {
            tsv += "# query\t" + m.query_id + "\n";
            tsv += matrix_to_tsv(m);
            tsv += "\n";
        }
        write_text_file(config_.work_dir / "matrices.tsv", tsv);
    }
    return matrices;
}

std::vector<RankingArtifact> Pipeline::stage_fuse(
    const std::vector<ScoreComponentMatrix>& matrices) {
    auto rankings = fuse_matrices(matrices, config_.fusion, config_.drop_components,
                                  config_.rrf_rank_constant);
    write_text_file(config_.work_dir / "rankings.jsonl", rankings_to_jsonl(rankings));
    return rankings;
}

EvalOptions Pipeline::eval_options() const {
    EvalOptions options;
    options.ks = config_.metric_ks;
    options.ndcg_k = config_.ndcg_k;
    options.group_by = config_.group_by;
    options.rank_aggregation = config_.rank_aggregation;
    return options;
}

MetricReport Pipeline::stage_evaluate(const std::vector<RankingArtifact>& rankings) {
    std::vector<RankedList> lists;
    lists.reserve(rankings.size());
    for (const auto& r : rankings) lists.push_back(to_ranked_list(r.fused, r.video_order));
    MetricReport report = evaluate_run(lists, corpus_.judgments, eval_options());
    write_text_file(config_.work_dir / "report.json", report_to_json_string(report));
    write_text_file(config_.work_dir / "report.tsv", report_to_tsv(report));
    return report;
}

RunResult Pipeline::run() {
    auto violations = validate();
    if (!violations.empty()) {
        std::string message = "corpus failed validation (" +
                              std::to_string(violations.size()) + " violations): ";
        for (std::size_t i = 0; i < std::min<std::size_t>(3, violations.size()); ++i) {
            message += violations[i].code + "[" + violations[i].subject + "] ";
        }
        throw ConfigError(message);
    }

    auto decompositions = stage_decompose();
    auto transcripts = stage_transcribe();
    auto descriptions = stage_describe(transcripts);
    auto matrices = stage_score(decompositions, descriptions);
    auto rankings = stage_fuse(matrices);

    RunResult result;
    result.report = stage_evaluate(rankings);
    result.rankings = std::move(rankings);

    std::string warnings;
    for (const auto& w : diagnostics_.sorted_snapshot()) {
        warnings += w;
        warnings += '\n';
    }
    write_text_file(config_.work_dir / "warnings.txt", warnings);

    std::string log;
    for (const auto& entry : call_log_->sorted_snapshot()) {
        json j = {{"prompt_sha", entry.prompt_sha},
                  {"input_sha", entry.input_sha},
                  {"model", entry.model}};
        log += j.dump();
        log += '\n';
    }
    write_text_file(config_.work_dir / "call_log.jsonl", log);
    return result;
}

std::vector<DecompositionArtifact> Pipeline::load_decompositions() const {
    json j = json::parse(read_text_file(config_.work_dir / "decompositions.json"));
    std::vector<DecompositionArtifact> out;
    for (const auto& item : j) out.push_back(decomposition_from_json(item));
    return out;
}

std::vector<TranscriptArtifact> Pipeline::load_transcripts() const {
    json j = json::parse(read_text_file(config_.work_dir / "transcripts.json"));
    std::vector<TranscriptArtifact> out;
    for (const auto& item : j) out.push_back(transcript_from_json(item));
    return out;
}

std::vector<DescriptionSet> Pipeline::load_descriptions() const {
    return load_descriptions_json(config_.work_dir / "descriptions.json");
}

std::vector<ScoreComponentMatrix> Pipeline::load_matrices() const {
    return load_score_matrices(config_.work_dir / "matrices.bin",
                               config_.work_dir / "matrices_index.json");
}

std::vector<RankingArtifact> Pipeline::load_rankings() const {
    return rankings_from_jsonl(read_text_file(config_.work_dir / "rankings.jsonl"));
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

std::string drop_label(std::span<const ComponentKind> drops) {
    if (drops.empty()) return "none";
    std::string label;
    for (ComponentKind kind : drops) {
        if (!label.empty()) label += '+';
        label += component_kind_name(kind);
    }
    return "-" + label;
}

std::string policy_label(const AggregationPolicy& policy) {
    auto rule_label = [](const AggregationRule& rule) {
        std::string s = aggregate_name(rule.kind);
        if (rule.kind == Aggregate::MeanTopK) s += "(" + std::to_string(rule.top_k) + ")";
        return s;
    };
    return "events=" + rule_label(policy.over_events) +
           ",captions=" + rule_label(policy.over_captions);
}

std::vector<AblationCell> run_ablation(Pipeline& pipeline, const AblationGrid& grid) {
    if (grid.fusion_methods.empty() && grid.component_drops.empty() &&
        grid.policies.empty()) {
        throw InvalidInputError("run_ablation: empty grid");
    }
    const RunConfig& config = pipeline.config();
    auto methods = grid.fusion_methods.empty()
                       ? std::vector<FusionMethod>{config.fusion}
                       : grid.fusion_methods;
    auto drops = grid.component_drops.empty()
                     ? std::vector<std::vector<ComponentKind>>{config.drop_components}
                     : grid.component_drops;
    auto policies = grid.policies.empty()
                        ? std::vector<AggregationPolicy>{config.aggregation}
                        : grid.policies;

    auto decompositions = pipeline.stage_decompose();
    auto transcripts = pipeline.stage_transcribe();
    auto descriptions = pipeline.stage_describe(transcripts);

    std::vector<RankedList> lists;
    std::vector<AblationCell> cells;
    for (const auto& policy : policies) {
        // the config policy persists the standard matrix artifacts
        const bool is_config_policy = policy == config.aggregation;
        auto matrices = pipeline.stage_score(decompositions, descriptions,
                                             is_config_policy ? nullptr : &policy);
        for (const auto& drop : drops) {
            for (FusionMethod method : methods) {
                AblationCell cell;
                cell.method = method;
                cell.drops = drop;
                cell.policy = policy;
                cell.rankings =
                    fuse_matrices(matrices, method, drop, config.rrf_rank_constant);
                lists.clear();
                for (const auto& r : cell.rankings) {
                    lists.push_back(to_ranked_list(r.fused, r.video_order));
                }
                cell.report = evaluate_run(lists, pipeline.corpus().judgments,
                                           pipeline.eval_options());
                cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

std::string ablation_to_tsv(std::span<const AblationCell> cells) {
    if (cells.empty()) return "";
    std::vector<std::vector<std::string>> table;
    std::vector<std::string> header = {"fusion", "drop", "aggregation"};
    for (const auto& name : cells.front().report.metric_order) header.push_back(name);
    table.push_back(header);

    char buf[64];
    for (const auto& cell : cells) {
        std::vector<std::string> row = {fusion_method_name(cell.method),
                                        drop_label(cell.drops), policy_label(cell.policy)};
        for (const auto& name : cell.report.metric_order) {
            const double value = cell.report.values.at(name);
            const bool rate = name.rfind("R@", 0) == 0 || name.rfind("P@", 0) == 0 ||
                              name.rfind("NDCG", 0) == 0 || name == "MAP";
            std::snprintf(buf, sizeof(buf), "%.2f", rate ? value * 100.0 : value);
            row.push_back(buf);
        }
        table.push_back(std::move(row));
    }

    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& row : table) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], row[c].size());
        }
    }
    std::string out;
    for (const auto& row : table) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::string cell = row[c];
            cell.resize(widths[c], ' ');
            out += cell;
            if (c + 1 < row.size()) out += '\t';
        }
        out += '\n';
    }
    return out;
}

std::string ablation_to_json_string(std::span<const AblationCell> cells) {
    json arr = json::array();
    for (const auto& cell : cells) {
        json j;
        j["fusion"] = fusion_method_name(cell.method);
        j["drop"] = drop_label(cell.drops);
        j["aggregation"] = policy_label(cell.policy);
        json values = json::object();
        for (const auto& [name, value] : cell.report.values) values[name] = value;
        j["values"] = values;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

}  // namespace evr
