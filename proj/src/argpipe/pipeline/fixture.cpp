#include "argpipe/pipeline/fixture.hpp"

#include <array>

#include "argpipe/common/hash.hpp"
#include "argpipe/common/rng.hpp"
#include "argpipe/corpus/tokenize.hpp"

namespace argpipe::pipeline {

using corpus::AnnotatedExample;
using corpus::ArgumentScheme;
using corpus::FactVariable;
using corpus::KnowledgeBase;
using corpus::Provenance;
using corpus::Span;
using corpus::Stance;

namespace {

const std::array<std::string, 6> kTopics = {
    "recycling mandates", "remote work",    "speed limits",
    "junk food tax",      "public transit", "night markets",
};

const std::array<std::vector<std::string>, 6> kTopicStems = {{
    {"curbside pickup", "sorting rules", "deposit schemes", "landfill quotas",
     "composting programs", "glass collection"},
    {"home office setups", "flexible schedules", "commute savings",
     "team rituals", "coworking stipends", "meeting hours"},
    {"residential zones", "school corridors", "camera enforcement",
     "highway stretches", "traffic calming", "night driving rules"},
    {"sugar levies", "snack labelling", "vending restrictions",
     "soda pricing", "school canteens", "advertising curbs"},
    {"bus corridors", "fare caps", "light rail lines", "bike feeders",
     "night services", "park and ride lots"},
    {"street vendors", "closing hours", "food stalls", "noise rules",
     "permit lotteries", "weekend fairs"},
}};

const std::array<std::string, 8> kAdjectives = {
    "strict", "modern", "voluntary", "universal",
    "affordable", "expanded", "seasonal", "digital",
};

const std::array<std::string, 6> kFillers = {
    "despite recent debate",  "according to the city office",
    "as many residents note", "after months of discussion",
    "in several districts",   "for the coming year",
};

// Noise clause: a fixed filler phrase plus a numbered case tag drawn from a
// vocab_size-wide pool. The vocabulary knob thereby controls how much noise
// vocabulary the taggers must cope with.
std::string make_filler(Rng& rng, int vocab_size) {
  return std::string(kFillers[uniform_index(rng, kFillers.size())]) +
         " on case " +
         std::to_string(uniform_index(rng, static_cast<std::uint64_t>(vocab_size)));
}

std::string fact_text(int topic_idx, int k) {
  const auto& stems = kTopicStems[static_cast<size_t>(topic_idx)];
  const auto& adj = kAdjectives[static_cast<size_t>(k + topic_idx) %
                                kAdjectives.size()];
  return adj + " " + stems[static_cast<size_t>(k) % stems.size()];
}

// A novel (non-KB) fact: the same adjective+stem shape the corpus uses,
// with a combination the KB never pairs. Sharing the stem keeps the
// hashed-BoW cosine to every KB fact near 2/3, below both the direct and
// community thresholds, so these spans stay unmapped until KB expansion.
std::string novel_fact_text(int topic_idx, int k) {
  const auto& stems = kTopicStems[static_cast<size_t>(topic_idx)];
  const size_t stem_idx = static_cast<size_t>(k) % stems.size();
  const size_t adj_idx =
      (stem_idx + static_cast<size_t>(topic_idx) + 3) % kAdjectives.size();
  return kAdjectives[adj_idx] + " " + stems[stem_idx];
}

struct Rendered {
  std::string text;
  std::pair<int, int> z0;  // char range
  std::pair<int, int> z1;
};

Rendered render(const ArgumentScheme scheme, const Stance stance,
                const std::string& z0, const std::string& z1) {
  std::string before, middle, after;
  const bool pro = stance == Stance::kPro;
  switch (scheme) {
    case ArgumentScheme::kFromConsequence:
      before = "";
      middle = pro ? " is favourable as it supports "
                   : " is not favourable as it undermines ";
      after = "";
      break;
    case ArgumentScheme::kFromSourceAuthority:
      before = "experts say ";
      middle = pro ? " supports " : " undermines ";
      after = "";
      break;
    case ArgumentScheme::kFromSourceKnowledge:
      before = "studies show ";
      middle = pro ? " leads to " : " fails to deliver ";
      after = "";
      break;
    case ArgumentScheme::kGoalMeansMerged:
      before = "";
      middle = pro ? " is an effective means to achieve "
                   : " is a poor means to achieve ";
      after = "";
      break;
    case ArgumentScheme::kRuleOrPrinciple:
      before = "";
      middle = pro ? " does not violate " : " is a violation of ";
      after = "";
      break;
    case ArgumentScheme::kOthers:
      before = pro ? "some people link " : "few people link ";
      middle = " with ";
      after = "";
      break;
  }
  Rendered r;
  r.text = before + z0 + middle + z1 + after;
  r.z0 = {static_cast<int>(before.size()),
          static_cast<int>(before.size() + z0.size())};
  const size_t z1_start = before.size() + z0.size() + middle.size();
  r.z1 = {static_cast<int>(z1_start), static_cast<int>(z1_start + z1.size())};
  return r;
}

Span char_range_to_token_span(const corpus::TokenizedText& tt, int cb, int ce,
                              std::string grounding) {
  int start = -1, end = -1;
  for (size_t i = 0; i < tt.offsets.size(); ++i) {
    if (tt.offsets[i].first == cb) start = static_cast<int>(i);
    if (tt.offsets[i].second == ce) end = static_cast<int>(i) + 1;
  }
  if (start < 0 || end <= start)
    throw Error("fixture render produced a misaligned span");
  return {start, end, std::move(grounding)};
}

// Up to four (text, grounding id) facts; the first two fill the scheme
// skeleton, any remainder lands in a neutral follow-on clause.
AnnotatedExample make_example(
    const std::string& id, const std::string& topic, ArgumentScheme scheme,
    Stance stance, const std::vector<std::pair<std::string, std::string>>& facts,
    const std::string& filler, bool labeled) {
  Rendered r = render(scheme, stance, facts[0].first, facts[1].first);
  std::vector<std::pair<std::pair<int, int>, std::string>> char_spans = {
      {r.z0, facts[0].second}, {r.z1, facts[1].second}};
  std::string text = r.text;
  if (facts.size() >= 3) {
    text += " . moreover ";
    char_spans.push_back(
        {{static_cast<int>(text.size()),
          static_cast<int>(text.size() + facts[2].first.size())},
         facts[2].second});
    text += facts[2].first;
    if (facts.size() >= 4) {
      text += " reinforces ";
      char_spans.push_back(
          {{static_cast<int>(text.size()),
            static_cast<int>(text.size() + facts[3].first.size())},
           facts[3].second});
      text += facts[3].first;
    }
  }
  if (!filler.empty()) text += " " + filler;
  AnnotatedExample ex;
  ex.id = id;
  ex.topic = topic;
  ex.argument = corpus::tokenize(text);
  ex.stance = stance;
  ex.provenance = Provenance::kFixture;
  if (labeled) {
    ex.schemes = {scheme};
    for (const auto& [range, grounding] : char_spans) {
      ex.spans.spans.push_back(char_range_to_token_span(
          ex.argument, range.first, range.second, grounding));
      if (std::find(ex.variables.begin(), ex.variables.end(), grounding) ==
          ex.variables.end())
        ex.variables.push_back(grounding);
    }
  }
  return ex;
}

}  // namespace

std::string render_skeleton(ArgumentScheme scheme, Stance stance,
                            const std::string& z0, const std::string& z1) {
  return render(scheme, stance, z0, z1).text;
}

const std::vector<ArgumentScheme>& grid_schemes() {
  static const std::vector<ArgumentScheme> kGrid = {
      ArgumentScheme::kFromConsequence,
      ArgumentScheme::kFromSourceAuthority,
      ArgumentScheme::kFromSourceKnowledge,
      ArgumentScheme::kRuleOrPrinciple,
  };
  return kGrid;
}

FixtureOutput make_fixture(const FixtureSpec& spec) {
  spec.validate();
  FixtureOutput out;
  Rng rng(spec.seed);

  for (int t = 0; t < spec.num_topics; ++t) {
    for (int k = 0; k < spec.kb_per_topic; ++k) {
      FactVariable v;
      v.id = "kb_" + std::to_string(t) + "_" + std::to_string(k);
      v.text = fact_text(t, k);
      v.topic = kTopics[static_cast<size_t>(t)];
      v.origin = corpus::VariableOrigin::kSeedKb;
      out.kb.add(std::move(v));
    }
  }

  if (spec.mode == "grid") {
    const int contexts =
        std::max(1, spec.num_topics * spec.examples_per_topic / 8);
    int idx = 0;
    for (int c = 0; c < contexts; ++c) {
      const int t = c % spec.num_topics;
      const std::string& topic = kTopics[static_cast<size_t>(t)];
      const auto& va = out.kb.get("kb_" + std::to_string(t) + "_" +
                                  std::to_string((2 * c) % spec.kb_per_topic));
      const auto& vb = out.kb.get(
          "kb_" + std::to_string(t) + "_" +
          std::to_string((2 * c + 1) % spec.kb_per_topic));
      for (ArgumentScheme scheme : grid_schemes()) {
        for (Stance stance : {Stance::kPro, Stance::kCon}) {
          out.labeled.push_back(make_example(
              "grid_" + std::to_string(idx++), topic, scheme, stance,
              {{va.text, va.id}, {vb.text, vb.id}}, "", true));
        }
      }
    }
    return out;
  }

  const auto& schemes = corpus::all_schemes();
  int labeled_idx = 0, pc_idx = 0;
  for (int t = 0; t < spec.num_topics; ++t) {
    const std::string& topic = kTopics[static_cast<size_t>(t)];
    for (int i = 0; i < spec.examples_per_topic; ++i) {
      const ArgumentScheme scheme = schemes[static_cast<size_t>(i) % schemes.size()];
      const Stance stance = (i / 2) % 2 == 0 ? Stance::kPro : Stance::kCon;
      auto kb_fact = [&](int k) {
        const auto& v = out.kb.get("kb_" + std::to_string(t) + "_" +
                                   std::to_string(k % spec.kb_per_topic));
        return std::make_pair(v.text, v.id);
      };
      std::vector<std::pair<std::string, std::string>> facts = {
          kb_fact(i), kb_fact(i + 1)};
      // half the corpus carries the longer two-clause shape
      if (i % 2 == 1) {
        facts.push_back(kb_fact(i + 2));
        facts.push_back(kb_fact(i + 3));
      }
      std::string filler;
      if (uniform_real(rng, 0.0, 1.0) < spec.noise_rate)
        filler = make_filler(rng, spec.vocab_size);
      out.labeled.push_back(make_example("p1_" + std::to_string(labeled_idx++),
                                         topic, scheme, stance, facts, filler,
                                         true));
    }
    for (int i = 0; i < spec.pc_per_topic; ++i) {
      // skip Others so expansion rows stay usable downstream
      const ArgumentScheme scheme =
          grid_schemes()[static_cast<size_t>(i) % grid_schemes().size()];
      const Stance stance = i % 2 == 0 ? Stance::kPro : Stance::kCon;
      auto kb_fact = [&](int k) {
        const auto& v = out.kb.get("kb_" + std::to_string(t) + "_" +
                                   std::to_string(k % spec.kb_per_topic));
        return std::make_pair(v.text, v.id);
      };
      // four facts per expansion row; a novel fourth keeps the unmapped
      // fraction at 25%, under the 30% cutoff
      std::vector<std::pair<std::string, std::string>> facts = {
          kb_fact(i), kb_fact(i + 1), kb_fact(i + 3)};
      if (uniform_real(rng, 0.0, 1.0) < 0.5) {
        facts.emplace_back(novel_fact_text(t, i), "novel");
      } else {
        facts.push_back(kb_fact(i + 4));
      }
      std::string filler;
      if (uniform_real(rng, 0.0, 1.0) < spec.noise_rate)
        filler = make_filler(rng, spec.vocab_size);
      out.unlabeled.push_back(make_example("pc_" + std::to_string(pc_idx++),
                                           topic, scheme, stance, facts,
                                           filler, false));
    }
  }
  return out;
}

}  // namespace argpipe::pipeline
