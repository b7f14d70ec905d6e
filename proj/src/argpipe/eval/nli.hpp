#pragma once

#include <array>
#include <string>

namespace argpipe::eval {

struct NliJudgement {
  double entail = 0.0;
  double contradict = 0.0;
  double neutral = 1.0;
};

// Probabilities over {entail, contradict, neutral}; they must sum to 1.
class NliProvider {
 public:
  virtual ~NliProvider() = default;
  virtual NliJudgement judge(const std::string& premise,
                             const std::string& hypothesis) const = 0;
  virtual std::string name() const = 0;
};

// Deterministic rule stub: high token overlap means entailment unless the
// negation/antonym parity of the two texts differs, in which case it means
// contradiction; low overlap is neutral. A real NLI model plugs in behind
// the same interface.
class RuleBasedNli : public NliProvider {
 public:
  NliJudgement judge(const std::string& premise,
                     const std::string& hypothesis) const override;
  std::string name() const override { return "rule-stub"; }
};

class ConstantNli : public NliProvider {
 public:
  ConstantNli(double entail, double contradict, double neutral)
      : j_{entail, contradict, neutral} {}
  NliJudgement judge(const std::string&, const std::string&) const override {
    return j_;
  }
  std::string name() const override { return "constant"; }

 private:
  NliJudgement j_;
};

struct EntailContra {
  bool entails = false;
  bool contradicts = false;
};

// entails iff P(entail) >= threshold; contradicts iff P(contradict) >=
// threshold; both false when neither clears.
EntailContra entail_contra(const std::string& original,
                           const std::string& generated,
                           const NliProvider& provider, double threshold);

}  // namespace argpipe::eval
