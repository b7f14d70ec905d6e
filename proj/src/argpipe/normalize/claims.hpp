#pragma once

#include <string>

namespace argpipe::normalize {

// Decides whether a text contains at least one claim. The production system
// this stands in for is an external argument parser; the interface keeps it
// pluggable.
class ClaimDetector {
 public:
  virtual ~ClaimDetector() = default;
  virtual bool has_claim(const std::string& text) const = 0;
  virtual std::string name() const = 0;
};

// Default detector: a sentence counts as a claim when it carries a
// stance-bearing modal, a stance verb, or a copula followed by an
// evaluative term.
class RuleBasedClaimDetector : public ClaimDetector {
 public:
  bool has_claim(const std::string& text) const override;
  std::string name() const override { return "rules"; }
};

class ConstantClaimDetector : public ClaimDetector {
 public:
  explicit ConstantClaimDetector(bool value) : value_(value) {}
  bool has_claim(const std::string&) const override { return value_; }
  std::string name() const override {
    return value_ ? "constant-true" : "constant-false";
  }

 private:
  bool value_;
};

}  // namespace argpipe::normalize
