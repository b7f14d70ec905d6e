#pragma once

#include <optional>
#include <string>
#include <vector>

#include "argpipe/corpus/types.hpp"

namespace argpipe::corpus {

enum class BioTag { kB, kI, kO };

char bio_char(BioTag t);

enum class BioDecodeMode {
  kLenient,  // an I with no preceding B or I opens a new span
  kStrict,   // orphan I is a validation error (gold-data checking)
};

// Per-channel BIO encoding of a labeling. channel = a grounding id (including
// the OTHERS sentinel) selects spans with that grounding; std::nullopt
// collapses all groundings into one channel. Output length == token_count.
std::vector<BioTag> encode_bio(const SpanLabeling& labeling, int token_count,
                               const std::optional<std::string>& channel);

// Inverse of encode_bio for a single channel; total on any tag sequence in
// lenient mode. Decoded spans carry the supplied grounding id.
SpanLabeling decode_bio(const std::vector<BioTag>& tags,
                        const std::string& grounding = std::string(kOthersGrounding),
                        BioDecodeMode mode = BioDecodeMode::kLenient);

// Multi-channel decode: one tag sequence per channel id; decoded spans from
// channel c carry channel_ids[c]. Caller guarantees channels claim disjoint
// tokens (the models resolve conflicts before decoding).
SpanLabeling decode_bio_channels(const std::vector<std::vector<BioTag>>& tags,
                                 const std::vector<std::string>& channel_ids,
                                 BioDecodeMode mode = BioDecodeMode::kLenient);

}  // namespace argpipe::corpus
