#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gmrfrec/common.hpp"

namespace gmrfrec {

// One parsed row of an interaction log. Implicit-feedback files usually carry
// no value column; those rows get value 1.0.
struct Interaction {
  std::string user_id;
  std::string item_id;
  double value = 1.0;
};

struct ParseOptions {
  char delimiter = ',';
  bool has_header = false;
  bool binarize = false;
  // Optional activity filters (0 = off). Items below the threshold are
  // dropped first, then users, in a single pass each.
  std::uint32_t min_item_interactions = 0;
  std::uint32_t min_user_interactions = 0;
};

// Sparse users x items matrix in CSR form plus the ID <-> dense-index maps.
// Immutable once built; rows are sorted by item index and hold no duplicates.
class InteractionMatrix {
 public:
  struct Entry {
    std::uint32_t item;
    double value;
  };

  std::size_t n_users() const { return user_ids_.size(); }
  std::size_t n_items() const { return item_ids_.size(); }
  std::size_t nnz() const { return entries_.size(); }

  std::span<const Entry> row(std::uint32_t user) const {
    return {entries_.data() + row_ptr_[user], entries_.data() + row_ptr_[user + 1]};
  }

  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }

  const std::string& user_id(std::uint32_t u) const { return user_ids_[u]; }
  const std::string& item_id(std::uint32_t i) const { return item_ids_[i]; }

  // -1 when the ID is unknown
  std::int64_t user_index(const std::string& id) const { return lookup(user_index_, id); }
  std::int64_t item_index(const std::string& id) const { return lookup(item_index_, id); }

  std::size_t row_size(std::uint32_t user) const { return row_ptr_[user + 1] - row_ptr_[user]; }

  // interaction count per item, used as popularity for tie-breaking
  std::vector<double> item_counts() const {
    std::vector<double> counts(n_items(), 0.0);
    for (const Entry& e : entries_) counts[e.item] += 1.0;
    return counts;
  }

  double value_at(std::uint32_t user, std::uint32_t item) const {
    auto r = row(user);
    auto it = std::lower_bound(r.begin(), r.end(), item,
                               [](const Entry& e, std::uint32_t i) { return e.item < i; });
    return (it != r.end() && it->item == item) ? it->value : 0.0;
  }

  // Builds the matrix from parsed rows: IDs are indexed in first-appearance
  // order, duplicate (user,item) pairs collapse to the max value, then the
  // optional activity filters and binarization are applied.
  static InteractionMatrix build(const std::vector<Interaction>& rows, const ParseOptions& opt) {
    if (rows.empty()) throw data_error("no interactions to ingest");

    std::unordered_map<std::string, std::uint32_t> umap, imap;
    std::vector<std::string> uids, iids;
    struct Trip {
      std::uint32_t user, item;
      double value;
    };
    std::vector<Trip> trips;
    trips.reserve(rows.size());
    for (const Interaction& r : rows) {
      auto [uit, unew] = umap.try_emplace(r.user_id, static_cast<std::uint32_t>(uids.size()));
      if (unew) uids.push_back(r.user_id);
      auto [iit, inew] = imap.try_emplace(r.item_id, static_cast<std::uint32_t>(iids.size()));
      if (inew) iids.push_back(r.item_id);
      trips.push_back({uit->second, iit->second, r.value});
    }

    std::sort(trips.begin(), trips.end(), [](const Trip& a, const Trip& b) {
      return a.user != b.user ? a.user < b.user : a.item < b.item;
    });
    // duplicate pairs: max value wins
    std::size_t out = 0;
    for (std::size_t i = 0; i < trips.size(); ++i) {
      if (out > 0 && trips[out - 1].user == trips[i].user && trips[out - 1].item == trips[i].item) {
        trips[out - 1].value = std::max(trips[out - 1].value, trips[i].value);
      } else {
        trips[out++] = trips[i];
      }
    }
    trips.resize(out);

    if (opt.min_item_interactions > 0 || opt.min_user_interactions > 0) {
      if (opt.min_item_interactions > 0) {
        std::vector<std::uint32_t> icount(iids.size(), 0);
        for (const Trip& t : trips) ++icount[t.item];
        std::erase_if(trips, [&](const Trip& t) { return icount[t.item] < opt.min_item_interactions; });
      }
      if (opt.min_user_interactions > 0) {
        std::vector<std::uint32_t> ucount(uids.size(), 0);
        for (const Trip& t : trips) ++ucount[t.user];
        std::erase_if(trips, [&](const Trip& t) { return ucount[t.user] < opt.min_user_interactions; });
      }
      if (trips.empty()) throw data_error("activity filters removed every interaction");
    }

    if (opt.binarize) {
      for (Trip& t : trips) t.value = 1.0;
    }

    // re-index so that every retained ID still has at least one entry
    InteractionMatrix mat;
    std::vector<std::int64_t> uremap(uids.size(), -1), iremap(iids.size(), -1);
    for (const Trip& t : trips) {
      if (uremap[t.user] < 0) {
        uremap[t.user] = static_cast<std::int64_t>(mat.user_ids_.size());
        mat.user_ids_.push_back(uids[t.user]);
      }
      if (iremap[t.item] < 0) {
        iremap[t.item] = static_cast<std::int64_t>(mat.item_ids_.size());
        mat.item_ids_.push_back(iids[t.item]);
      }
    }
    for (std::uint32_t u = 0; u < mat.user_ids_.size(); ++u) mat.user_index_[mat.user_ids_[u]] = u;
    for (std::uint32_t i = 0; i < mat.item_ids_.size(); ++i) mat.item_index_[mat.item_ids_[i]] = i;

    struct Key {
      std::uint32_t user, item;
      double value;
    };
    std::vector<Key> remapped;
    remapped.reserve(trips.size());
    for (const Trip& t : trips) {
      remapped.push_back({static_cast<std::uint32_t>(uremap[t.user]),
                          static_cast<std::uint32_t>(iremap[t.item]), t.value});
    }
    std::sort(remapped.begin(), remapped.end(), [](const Key& a, const Key& b) {
      return a.user != b.user ? a.user < b.user : a.item < b.item;
    });

    mat.row_ptr_.assign(mat.user_ids_.size() + 1, 0);
    mat.entries_.reserve(remapped.size());
    for (const Key& k : remapped) {
      ++mat.row_ptr_[k.user + 1];
      mat.entries_.push_back({k.item, k.value});
    }
    for (std::size_t u = 0; u < mat.user_ids_.size(); ++u) mat.row_ptr_[u + 1] += mat.row_ptr_[u];
    return mat;
  }

 private:
  static std::int64_t lookup(const std::unordered_map<std::string, std::uint32_t>& map,
                             const std::string& id) {
    auto it = map.find(id);
    return it == map.end() ? -1 : static_cast<std::int64_t>(it->second);
  }

  std::vector<std::size_t> row_ptr_{0};
  std::vector<Entry> entries_;
  std::vector<std::string> user_ids_, item_ids_;
  std::unordered_map<std::string, std::uint32_t> user_index_, item_index_;
};

namespace detail {

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(delim, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace detail

// Reads a delimited file with columns user,item[,value]. Malformed rows are
// reported with their 1-based line number.
inline InteractionMatrix load_interactions(const std::string& path, const ParseOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open interaction file: " + path);

  std::vector<Interaction> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    if (lineno == 1 && opt.has_header) continue;

    std::vector<std::string> fields = detail::split_fields(line, opt.delimiter);
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty() || fields[1].empty()) {
      throw data_error("malformed row at line " + std::to_string(lineno) + ": '" + line + "'");
    }
    double value = 1.0;
    if (fields.size() == 3) {
      try {
        std::size_t used = 0;
        value = std::stod(fields[2], &used);
        if (used != fields[2].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw data_error("malformed value at line " + std::to_string(lineno) + ": '" + fields[2] + "'");
      }
      if (!(value >= 0.0)) {
        throw data_error("negative value at line " + std::to_string(lineno));
      }
    }
    rows.push_back({std::move(fields[0]), std::move(fields[1]), value});
  }
  if (rows.empty()) throw data_error("no interaction rows in " + path);
  return InteractionMatrix::build(rows, opt);
}

// New matrix holding only the given users' rows, values untouched. IDs are
// re-indexed in encounter order, so items seen only by dropped users vanish.
inline InteractionMatrix subset_users(const InteractionMatrix& mat,
                                      std::span<const std::uint32_t> users) {
  std::vector<Interaction> rows;
  for (std::uint32_t u : users) {
    for (const auto& e : mat.row(u)) rows.push_back({mat.user_id(u), mat.item_id(e.item), e.value});
  }
  return InteractionMatrix::build(rows, ParseOptions{});
}

}  // namespace gmrfrec
