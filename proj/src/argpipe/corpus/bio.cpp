#include "argpipe/corpus/bio.hpp"

#include <algorithm>

namespace argpipe::corpus {

char bio_char(BioTag t) {
  switch (t) {
    case BioTag::kB: return 'B';
    case BioTag::kI: return 'I';
    case BioTag::kO: return 'O';
  }
  return '?';
}

std::vector<BioTag> encode_bio(const SpanLabeling& labeling, int token_count,
                               const std::optional<std::string>& channel) {
  labeling.validate(token_count);
  std::vector<BioTag> tags(static_cast<size_t>(token_count), BioTag::kO);
  for (const Span& s : labeling.spans) {
    if (channel && s.grounding != *channel) continue;
    tags[static_cast<size_t>(s.start)] = BioTag::kB;
    for (int p = s.start + 1; p < s.end; ++p)
      tags[static_cast<size_t>(p)] = BioTag::kI;
  }
  return tags;
}

SpanLabeling decode_bio(const std::vector<BioTag>& tags,
                        const std::string& grounding, BioDecodeMode mode) {
  SpanLabeling out;
  int open_start = -1;
  const int n = static_cast<int>(tags.size());
  for (int p = 0; p < n; ++p) {
    switch (tags[static_cast<size_t>(p)]) {
      case BioTag::kB:
        if (open_start >= 0) out.spans.push_back({open_start, p, grounding});
        open_start = p;
        break;
      case BioTag::kI:
        if (open_start < 0) {
          if (mode == BioDecodeMode::kStrict)
            throw ValidationError("orphan I tag at position " +
                                  std::to_string(p));
          open_start = p;
        }
        break;
      case BioTag::kO:
        if (open_start >= 0) {
          out.spans.push_back({open_start, p, grounding});
          open_start = -1;
        }
        break;
    }
  }
  if (open_start >= 0) out.spans.push_back({open_start, n, grounding});
  return out;
}

SpanLabeling decode_bio_channels(const std::vector<std::vector<BioTag>>& tags,
                                 const std::vector<std::string>& channel_ids,
                                 BioDecodeMode mode) {
  if (tags.size() != channel_ids.size())
    throw ShapeError("one channel id per tag sequence required");
  SpanLabeling out;
  for (size_t c = 0; c < tags.size(); ++c) {
    SpanLabeling one = decode_bio(tags[c], channel_ids[c], mode);
    out.spans.insert(out.spans.end(), one.spans.begin(), one.spans.end());
  }
  std::sort(out.spans.begin(), out.spans.end(),
            [](const Span& a, const Span& b) { return a.start < b.start; });
  return out;
}

}  // namespace argpipe::corpus
