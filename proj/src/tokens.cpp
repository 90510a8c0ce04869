#include "orthoerase/tokens.hpp"

#include <cctype>
#include <cmath>
#include <string>

#include "orthoerase/avde.hpp"
#include "orthoerase/errors.hpp"
#include "orthoerase/rng.hpp"

namespace orthoerase::tokens {

namespace {

constexpr double kCausalDecay = 0.5;

std::uint64_t word_id(std::string_view word) {
    // Ids 0 and 1 are reserved for [SOT]/[EOT]; hashed words start at 2.
    return 2 + (fnv1a(word) % (std::uint64_t{1} << 62));
}

// Seeded deterministic unit vector per token id, restricted to [lo, hi).
linalg::Vec base_vector(std::uint64_t id, std::uint64_t seed, std::size_t d_c,
                        std::size_t lo, std::size_t hi) {
    SplitMix64 rng(derive_seed(seed, "token-base", id));
    linalg::Vec v(d_c, 0.0);
    double nrm2 = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        v[i] = rng.next_gaussian();
        nrm2 += v[i] * v[i];
    }
    const double nrm = std::sqrt(nrm2);
    if (nrm > 0.0) {
        for (std::size_t i = lo; i < hi; ++i) v[i] /= nrm;
    }
    return v;
}

}  // namespace

TokenSequence tokenize(std::string_view text, std::size_t token_length) {
    std::vector<std::uint64_t> words;
    std::string current;
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            current.push_back(
                static_cast<char>(std::tolower(uc)));
        } else if (!current.empty()) {
            words.push_back(word_id(current));
            current.clear();
        }
    }
    if (!current.empty()) words.push_back(word_id(current));

    if (words.empty()) {
        throw PromptTooShort("tokenize: no content tokens in \"" +
                             std::string(text) + "\"");
    }
    if (token_length < 3 || words.size() > token_length - 2) {
        throw PromptTooLong("tokenize: " + std::to_string(words.size()) +
                            " words exceed token length " +
                            std::to_string(token_length));
    }

    TokenSequence seq;
    seq.ids.assign(token_length, kEotId);
    seq.ids[0] = kSotId;
    for (std::size_t i = 0; i < words.size(); ++i) seq.ids[i + 1] = words[i];
    seq.content_len = words.size();
    return seq;
}

EmbeddingMatrix encode_causal(const TokenSequence& tokens, std::uint64_t seed,
                              std::size_t d_c, Provenance provenance,
                              ChannelBand band) {
    const std::size_t l = tokens.length();
    if (l == 0 || d_c == 0) {
        throw DimensionMismatch("encode_causal: empty token sequence or d_c");
    }
    const std::size_t lo = band.full() ? 0 : band.lo;
    const std::size_t hi = band.full() ? d_c : band.hi;
    if (lo >= hi || hi > d_c) {
        throw DimensionMismatch("encode_causal: bad channel band");
    }

    EmbeddingMatrix emb;
    emb.provenance = provenance;
    emb.rows = linalg::Mat(l, d_c);

    // mix_j = base(id_j) + 0.5 * mix_{j-1}; each row is the normalized mix,
    // so row j sees exactly ids 0..j.
    linalg::Vec mix(d_c, 0.0);
    for (std::size_t j = 0; j < l; ++j) {
        for (std::size_t i = 0; i < d_c; ++i) mix[i] *= kCausalDecay;
        const linalg::Vec base = base_vector(tokens.ids[j], seed, d_c, lo, hi);
        for (std::size_t i = 0; i < d_c; ++i) mix[i] += base[i];

        linalg::Vec row = mix;
        const double nrm = linalg::norm(row);
        if (nrm > 0.0) {
            for (double& x : row) x /= nrm;
        }
        emb.rows.set_row(j, row);
    }
    return emb;
}

EmbeddingMatrix preprocess_target(const EmbeddingMatrix& emb,
                                  const TokenSequence& tokens) {
    if (emb.provenance == Provenance::prompt) {
        throw WrongProvenance(
            "preprocess_target: expected a target embedding");
    }
    if (emb.rows.rows != tokens.length()) {
        throw DimensionMismatch("preprocess_target: embedding rows " +
                                std::to_string(emb.rows.rows) +
                                " vs token length " +
                                std::to_string(tokens.length()));
    }
    if (tokens.content_len == 0) {
        throw NoContentToken("preprocess_target: sequence has no content token");
    }

    EmbeddingMatrix out;
    out.provenance = Provenance::target_preprocessed;
    out.rows = linalg::Mat(emb.rows.rows, emb.rows.cols);
    out.rows.set_row(0, emb.rows.row(0));
    const linalg::Vec subject = emb.rows.row(tokens.content_len);
    for (std::size_t j = 1; j < out.rows.rows; ++j) {
        out.rows.set_row(j, subject);
    }
    return out;
}

void save_embedding(const std::filesystem::path& path,
                    const EmbeddingMatrix& emb) {
    avde::write_matrix(path, emb.rows);
}

EmbeddingMatrix load_embedding(const std::filesystem::path& path,
                               Provenance provenance) {
    EmbeddingMatrix emb;
    emb.rows = avde::read_matrix(path);
    emb.provenance = provenance;
    return emb;
}

}  // namespace orthoerase::tokens
