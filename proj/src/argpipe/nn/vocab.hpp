#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "argpipe/common/error.hpp"

namespace argpipe::nn {

// Closed token inventory with a designated <unk> fallback. Insertion order
// is the id order, so building from sorted input keeps ids deterministic.
class Vocab {
 public:
  int add(const std::string& token);
  bool contains(std::string_view token) const;
  int id(std::string_view token) const;  // throws on unknown
  int id_or_unk(std::string_view token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(items_.size()); }
  const std::vector<std::string>& items() const { return items_; }

  void set_unk(const std::string& token) { unk_ = id(token); }
  int unk_id() const { return unk_; }

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, int> index_;
  int unk_ = -1;
};

inline int Vocab::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(items_.size());
  items_.push_back(token);
  index_.emplace(token, id);
  return id;
}

inline bool Vocab::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

inline int Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end())
    throw ValidationError("token not in vocabulary: '" + std::string(token) +
                          "'");
  return it->second;
}

inline int Vocab::id_or_unk(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it != index_.end()) return it->second;
  if (unk_ < 0)
    throw ValidationError("unknown token '" + std::string(token) +
                          "' and no <unk> configured");
  return unk_;
}

inline const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) throw RangeError("token id out of range");
  return items_[static_cast<size_t>(id)];
}

}  // namespace argpipe::nn
