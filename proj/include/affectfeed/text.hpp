#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace affectfeed {

// Lowercases ASCII letters and splits on whitespace and ASCII punctuation;
// punctuation is dropped. Bytes >= 0x80 are kept inside tokens.
std::vector<std::string> tokenize(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end);
std::string join_tokens(const std::vector<std::string>& tokens);

// 64-bit FNV-1a; stable across platforms and runs.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace affectfeed
