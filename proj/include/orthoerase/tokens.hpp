#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "orthoerase/linalg.hpp"

namespace orthoerase::tokens {

inline constexpr std::uint64_t kSotId = 0;
inline constexpr std::uint64_t kEotId = 1;

// Fixed-length token sequence: [SOT] at position 0, content tokens at
// 1..content_len, [EOT] filling every remaining position.
struct TokenSequence {
    std::vector<std::uint64_t> ids;
    std::size_t content_len = 0;

    std::size_t length() const { return ids.size(); }
    std::size_t eot_start() const { return content_len + 1; }
};

// Whitespace/punctuation splitting onto a stable hash-id space. Words are
// lowercased; any non-alphanumeric byte separates. Same text, same ids.
// Throws PromptTooShort on empty trimmed text, PromptTooLong when the word
// count exceeds token_length - 2.
TokenSequence tokenize(std::string_view text, std::size_t token_length);

enum class Provenance { prompt, target_raw, target_preprocessed };

struct EmbeddingMatrix {
    linalg::Mat rows;  // token_length x d_c
    Provenance provenance = Provenance::prompt;
};

// Restricts token base vectors to embedding coordinates [lo, hi). The
// default (hi == 0) means the whole coordinate range. Used by the pipeline's
// orthogonal-construction scenarios to place prompt and target tokens in
// disjoint coordinate bands.
struct ChannelBand {
    std::size_t lo = 0;
    std::size_t hi = 0;

    bool full() const { return hi == 0; }
};

// Causal synthetic encoder. Row j is the unit-normalized mix
//   base(id_j) + sum_{i<j} 0.5^{j-i} base(id_i)
// where base(id) is a seeded deterministic pseudo-random unit vector per
// token id. Row j therefore depends only on ids 0..j, so prompts sharing a
// prefix share those embedding rows exactly.
EmbeddingMatrix encode_causal(const TokenSequence& tokens, std::uint64_t seed,
                              std::size_t d_c,
                              Provenance provenance = Provenance::prompt,
                              ChannelBand band = {});

// Duplicates the last subject token: row 0 (the [SOT] row) is preserved and
// rows 1..l-1 are all replaced by the embedding row of the last content
// token. Idempotent; accepts target-raw or target-preprocessed input and
// rejects prompt provenance. Throws NoContentToken when content_len == 0.
EmbeddingMatrix preprocess_target(const EmbeddingMatrix& emb,
                                  const TokenSequence& tokens);

// "AVDE" binary embedding file round trip (bit-exact).
void save_embedding(const std::filesystem::path& path,
                    const EmbeddingMatrix& emb);
EmbeddingMatrix load_embedding(const std::filesystem::path& path,
                               Provenance provenance = Provenance::prompt);

}  // namespace orthoerase::tokens
