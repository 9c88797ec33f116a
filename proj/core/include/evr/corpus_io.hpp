#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "evr/types.hpp"

namespace evr {

// One JSON document naming every corpus file. Relative paths are resolved
// against the manifest's own directory.
struct CorpusManifest {
    std::size_t embedding_dim = 0;
    std::filesystem::path queries;
    std::filesystem::path judgments;
    std::filesystem::path videos;
    std::filesystem::path embeddings_bin;
    std::filesystem::path embeddings_index;
};

CorpusManifest load_manifest(const std::filesystem::path& manifest_path);

// JSONL, one record per line.
std::vector<QueryRecord> load_queries_jsonl(const std::filesystem::path& path);
void save_queries_jsonl(const std::filesystem::path& path,
                        const std::vector<QueryRecord>& queries);

RelevanceJudgments load_judgments_jsonl(const std::filesystem::path& path);
void save_judgments_jsonl(const std::filesystem::path& path,
                          const RelevanceJudgments& judgments);

// Frame embeddings: a flat little-endian float32 binary file plus a JSON
// index {video_id -> {offset, frame_count, dim}} with byte offsets.
void save_embeddings(const std::filesystem::path& bin_path,
                     const std::filesystem::path& index_path,
                     const std::vector<VideoRecord>& videos);
void load_embeddings(const std::filesystem::path& bin_path,
                     const std::filesystem::path& index_path,
                     std::vector<VideoRecord>& videos);

// Whole corpus: load via manifest, save as a directory of the standard
// files plus a manifest.json.
Corpus load_corpus(const std::filesystem::path& manifest_path);
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus);

// Description sets are a pipeline artifact with their own JSON file.
std::vector<DescriptionSet> load_descriptions_json(const std::filesystem::path& path);
void save_descriptions_json(const std::filesystem::path& path,
                            const std::vector<DescriptionSet>& descriptions);

// Small file helpers shared across modules.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace evr
