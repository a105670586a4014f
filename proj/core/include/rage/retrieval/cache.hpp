#pragma once

#include <filesystem>
#include <vector>

#include "rage/retrieval/snippets.hpp"

namespace rage::retrieval {

// One JSON object per line:
//   {"pair_id", "snippets": [{"tokens", "score", "review_id"}], "excluded"}
void write_snippet_cache(const std::filesystem::path& path, const std::vector<SnippetSet>& sets);
std::vector<SnippetSet> read_snippet_cache(const std::filesystem::path& path);

}  // namespace rage::retrieval
