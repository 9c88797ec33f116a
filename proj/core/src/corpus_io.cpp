#include "evr/corpus_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "evr/errors.hpp"
#include "nlohmann/json.hpp"

namespace evr {

namespace {

using nlohmann::json;

json parse_json_file(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid JSON in " + path.string());
    return j;
}

std::vector<json> parse_jsonl_file(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    std::vector<json> records;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw ParseError("invalid JSON at " + path.string() + ":" +
                             std::to_string(lineno));
        }
        records.push_back(std::move(j));
    }
    return records;
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& value) {
    std::filesystem::path p(value);
    if (p.is_absolute()) return p;
    return base / p;
}

void append_f32_le(std::string& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    out.push_back(static_cast<char>(bits & 0xff));
    out.push_back(static_cast<char>((bits >> 8) & 0xff));
    out.push_back(static_cast<char>((bits >> 16) & 0xff));
    out.push_back(static_cast<char>((bits >> 24) & 0xff));
}

float read_f32_le(const unsigned char* p) {
    std::uint32_t bits = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
                         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed for " + path.string());
}

CorpusManifest load_manifest(const std::filesystem::path& manifest_path) {
    json j = parse_json_file(manifest_path);
    const auto base = manifest_path.parent_path();
    CorpusManifest m;
    try {
        m.embedding_dim = j.at("embedding_dim").get<std::size_t>();
        m.queries = resolve(base, j.at("queries").get<std::string>());
        m.judgments = resolve(base, j.at("judgments").get<std::string>());
        m.videos = resolve(base, j.at("videos").get<std::string>());
        m.embeddings_bin = resolve(base, j.at("embeddings").get<std::string>());
        m.embeddings_index = resolve(base, j.at("embeddings_index").get<std::string>());
    } catch (const json::exception& e) {
        throw ParseError("manifest " + manifest_path.string() + ": " + e.what());
    }
    return m;
}

std::vector<QueryRecord> load_queries_jsonl(const std::filesystem::path& path) {
    std::vector<QueryRecord> out;
    for (const json& j : parse_jsonl_file(path)) {
        QueryRecord q;
        q.id = j.at("id").get<std::string>();
        q.text = j.at("text").get<std::string>();
        if (j.contains("language")) q.language = j.at("language").get<std::string>();
        if (j.contains("category")) q.category = j.at("category").get<std::string>();
        out.push_back(std::move(q));
    }
    return out;
}

void save_queries_jsonl(const std::filesystem::path& path,
                        const std::vector<QueryRecord>& queries) {
    std::string out;
    for (const auto& q : queries) {
        json j;
        j["id"] = q.id;
        j["text"] = q.text;
        if (q.language) j["language"] = *q.language;
        if (q.category) j["category"] = *q.category;
        out += j.dump();
        out += '\n';
    }
    write_text_file(path, out);
}

RelevanceJudgments load_judgments_jsonl(const std::filesystem::path& path) {
    RelevanceJudgments out;
    for (const json& j : parse_jsonl_file(path)) {
        const auto query_id = j.at("query_id").get<std::string>();
        auto& rel = out.relevant[query_id];
        for (const auto& v : j.at("relevant")) rel.insert(v.get<std::string>());
        QueryLabels labels;
        if (j.contains("language")) labels.language = j.at("language").get<std::string>();
        if (j.contains("category")) labels.category = j.at("category").get<std::string>();
        if (labels.language || labels.category) out.labels[query_id] = labels;
    }
    return out;
}

void save_judgments_jsonl(const std::filesystem::path& path,
                          const RelevanceJudgments& judgments) {
    std::string out;
    for (const auto& [query_id, rel] : judgments.relevant) {
        json j;
        j["query_id"] = query_id;
        j["relevant"] = rel;
        auto lit = judgments.labels.find(query_id);
        if (lit != judgments.labels.end()) {
            if (lit->second.language) j["language"] = *lit->second.language;
            if (lit->second.category) j["category"] = *lit->second.category;
        }
        out += j.dump();
        out += '\n';
    }
    write_text_file(path, out);
}

void save_embeddings(const std::filesystem::path& bin_path,
                     const std::filesystem::path& index_path,
                     const std::vector<VideoRecord>& videos) {
    std::string blob;
    json index = json::object();
    for (const auto& v : videos) {
        const std::size_t offset = blob.size();
        std::size_t dim = v.frame_embeddings.empty() ? 0 : v.frame_embeddings.front().size();
        for (const Vec& e : v.frame_embeddings) {
            for (double x : e) append_f32_le(blob, static_cast<float>(x));
        }
        index[v.id] = {{"offset", offset},
                       {"frame_count", v.frame_embeddings.size()},
                       {"dim", dim}};
    }
    write_text_file(bin_path, blob);
    write_text_file(index_path, index.dump(2) + "\n");
}

void load_embeddings(const std::filesystem::path& bin_path,
                     const std::filesystem::path& index_path,
                     std::vector<VideoRecord>& videos) {
    const std::string blob = read_text_file(bin_path);
    json index = parse_json_file(index_path);
    for (auto& v : videos) {
        auto it = index.find(v.id);
        if (it == index.end()) {
            throw ParseError("embeddings index has no entry for video " + v.id);
        }
        const std::size_t offset = it->at("offset").get<std::size_t>();
        const std::size_t frames = it->at("frame_count").get<std::size_t>();
        const std::size_t dim = it->at("dim").get<std::size_t>();
        const std::size_t bytes = frames * dim * 4;
        if (offset + bytes > blob.size()) {
            throw ParseError("embeddings blob too short for video " + v.id);
        }
        v.frame_embeddings.assign(frames, Vec(dim, 0.0));
        const auto* p = reinterpret_cast<const unsigned char*>(blob.data()) + offset;
        for (std::size_t f = 0; f < frames; ++f) {
            for (std::size_t d = 0; d < dim; ++d) {
                v.frame_embeddings[f][d] = static_cast<double>(read_f32_le(p));
                p += 4;
            }
        }
    }
}

Corpus load_corpus(const std::filesystem::path& manifest_path) {
    const CorpusManifest m = load_manifest(manifest_path);
    Corpus corpus;
    corpus.embedding_dim = m.embedding_dim;
    corpus.queries = load_queries_jsonl(m.queries);
    corpus.judgments = load_judgments_jsonl(m.judgments);
    for (const json& j : parse_jsonl_file(m.videos)) {
        VideoRecord v;
        v.id = j.at("id").get<std::string>();
        v.frame_count = j.at("frame_count").get<std::int64_t>();
        v.has_audio = j.at("has_audio").get<bool>();
        corpus.videos.push_back(std::move(v));
    }
    load_embeddings(m.embeddings_bin, m.embeddings_index, corpus.videos);
    return corpus;
}

void save_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
    std::filesystem::create_directories(dir);
    save_queries_jsonl(dir / "queries.jsonl", corpus.queries);
    save_judgments_jsonl(dir / "judgments.jsonl", corpus.judgments);

    std::string videos_out;
    for (const auto& v : corpus.videos) {
        json j;
        j["id"] = v.id;
        j["frame_count"] = v.frame_count;
        j["has_audio"] = v.has_audio;
        videos_out += j.dump();
        videos_out += '\n';
    }
    write_text_file(dir / "videos.jsonl", videos_out);
    save_embeddings(dir / "embeddings.bin", dir / "embeddings_index.json", corpus.videos);

    json manifest;
    manifest["embedding_dim"] = corpus.embedding_dim;
    manifest["queries"] = "queries.jsonl";
    manifest["judgments"] = "judgments.jsonl";
    manifest["videos"] = "videos.jsonl";
    manifest["embeddings"] = "embeddings.bin";
    manifest["embeddings_index"] = "embeddings_index.json";
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<DescriptionSet> load_descriptions_json(const std::filesystem::path& path) {
    json j = parse_json_file(path);
    std::vector<DescriptionSet> out;
    for (const auto& item : j) {
        DescriptionSet d;
        d.video_id = item.at("video_id").get<std::string>();
        for (const auto& c : item.at("frame_captions")) {
            d.frame_captions.push_back(c.get<std::string>());
        }
        if (item.contains("video_caption")) {
            d.video_caption = item.at("video_caption").get<std::string>();
        }
        if (item.contains("transcript")) {
            d.transcript = item.at("transcript").get<std::string>();
        }
        out.push_back(std::move(d));
    }
    return out;
}

void save_descriptions_json(const std::filesystem::path& path,
                            const std::vector<DescriptionSet>& descriptions) {
    json arr = json::array();
    for (const auto& d : descriptions) {
        json j;
        j["video_id"] = d.video_id;
        j["frame_captions"] = d.frame_captions;
        if (d.video_caption) j["video_caption"] = *d.video_caption;
        if (d.transcript) j["transcript"] = *d.transcript;
        arr.push_back(std::move(j));
    }
    write_text_file(path, arr.dump(2) + "\n");
}

}  // namespace evr
