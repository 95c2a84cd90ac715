// Copyright 2026 The pbcore Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pbcore/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "pbcore/error.hpp"

namespace pbcore {
namespace {

[[noreturn]] void parse_fail(std::size_t line, std::size_t column, const std::string& what) {
  fail(ErrorCode::kParse,
       "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

// One CSV record; double quotes may wrap a field and "" escapes a quote.
std::vector<std::string> split_record(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t c = 0; c < line.size(); ++c) {
    const char ch = line[c];
    if (quoted) {
      if (ch == '"' && c + 1 < line.size() && line[c + 1] == '"') {
        fields.back() += '"';
        ++c;
      } else if (ch == '"') {
        quoted = false;
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"' && fields.back().empty()) {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else {
      fields.back() += ch;
    }
  }
  if (quoted) parse_fail(line_no, fields.size(), "unterminated quoted field");
  return fields;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> default_names(std::size_t k) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < k; ++j) names.push_back("item" + std::to_string(j + 1));
  return names;
}

std::vector<std::string> default_voters(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("v" + std::to_string(i + 1));
  return ids;
}

VoteMatrix matrix(std::size_t n, std::vector<std::string> items, std::vector<double> cells) {
  return {default_voters(n), std::move(items), std::move(cells)};
}

// Sizes in whole dollars from [50,000, 150,000] and a budget of 40% of their
// total, as in typical city ballots.
void random_costs(SyntheticElection& e, std::size_t k, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> dollars(50000, 150000);
  std::int64_t total = 0;
  for (std::size_t j = 0; j < k; ++j) {
    e.size_cents.push_back(dollars(rng) * 100);
    total += e.size_cents.back();
  }
  e.budget_cents = (total * 2 / 5) / 100 * 100;
}

void unit_costs(SyntheticElection& e, std::size_t k) {
  e.budget_cents = 100;
  e.size_cents.assign(k, 100);
}

// Approval rows with per-cell probabilities; empty rows are redrawn.
std::vector<double> approvals(std::size_t n, std::size_t k, std::mt19937_64& rng,
                              const std::function<double(std::size_t, std::size_t)>& prob) {
  std::uniform_real_distribution<double> unit;
  std::vector<double> cells(n * k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (int attempt = 0; !any; ++attempt) {
      require(attempt < 100000, ErrorCode::kInvalidArgument,
              "approval probabilities almost never produce a nonempty ballot");
      for (std::size_t j = 0; j < k; ++j) {
        const bool yes = unit(rng) < prob(i, j);
        cells[i * k + j] = yes ? 1.0 : 0.0;
        any = any || yes;
      }
    }
  }
  return cells;
}

}  // namespace

VoteMatrix parse_votes(std::string_view csv) {
  VoteMatrix out;
  std::set<std::string> seen_items, seen_voters;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = true;
  while (pos <= csv.size()) {
    std::size_t end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    std::string_view line = csv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == csv.size()) break;
      continue;
    }
    auto fields = split_record(line, line_no);
    for (auto& f : fields) f = trim(std::move(f));
    if (header) {
      if (line_no == 1 && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
      if (fields[0] != "voter_id") parse_fail(line_no, 1, "header must start with voter_id");
      if (fields.size() < 2) parse_fail(line_no, 2, "header names no items");
      for (std::size_t c = 1; c < fields.size(); ++c) {
        if (fields[c].empty()) parse_fail(line_no, c + 1, "empty item name");
        if (!seen_items.insert(fields[c]).second) {
          parse_fail(line_no, c + 1, "duplicate item name '" + fields[c] + "'");
        }
        out.items.push_back(fields[c]);
      }
      header = false;
      continue;
    }
    const std::size_t k = out.items.size();
    if (fields.size() != k + 1) {
      parse_fail(line_no, std::min(fields.size(), k + 1) + (fields.size() > k + 1 ? 1 : 0),
                 "expected " + std::to_string(k + 1) + " cells, found " +
                     std::to_string(fields.size()));
    }
    if (fields[0].empty()) parse_fail(line_no, 1, "empty voter id");
    if (!seen_voters.insert(fields[0]).second) {
      parse_fail(line_no, 1, "duplicate voter id '" + fields[0] + "'");
    }
    bool any = false;
    for (std::size_t c = 1; c <= k; ++c) {
      const std::string& f = fields[c];
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
        parse_fail(line_no, c + 1, "'" + f + "' is not a number");
      }
      if (v < 0.0) parse_fail(line_no, c + 1, "negative vote value");
      any = any || v > 0.0;
      out.cells.push_back(v);
    }
    if (!any) parse_fail(line_no, 1, "voter '" + fields[0] + "' supports no item");
    out.voter_ids.push_back(fields[0]);
  }
  if (header) fail(ErrorCode::kParse, "vote file is empty");
  if (out.voter_ids.empty()) fail(ErrorCode::kParse, "vote file has no voter rows");
  return out;
}

VoteMatrix read_votes(const std::string& path) { return parse_votes(read_file(path)); }

std::string format_votes(const VoteMatrix& votes) {
  std::string out = "voter_id";
  for (const auto& item : votes.items) out += "," + quote_if_needed(item);
  out += "\n";
  const std::size_t k = votes.items.size();
  for (std::size_t i = 0; i < votes.voters(); ++i) {
    out += quote_if_needed(votes.voter_ids[i]);
    for (std::size_t j = 0; j < k; ++j) out += "," + format_number(votes.cells[i * k + j]);
    out += "\n";
  }
  return out;
}

std::int64_t to_cents(double amount) {
  require(std::isfinite(amount) && std::abs(amount) < 9.0e13, ErrorCode::kInvalidArgument,
          "money amount out of range");
  return std::llround(amount * 100.0);
}

double from_cents(std::int64_t cents) noexcept { return static_cast<double>(cents) / 100.0; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorCode::kIo, "short write to " + path);
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::kInternal, "sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int b = 0; b < len; ++b) {
    out += hex[digest[b] >> 4];
    out += hex[digest[b] & 15];
  }
  return out;
}

Instance SyntheticElection::instance() const {
  std::vector<double> sizes;
  for (auto c : size_cents) sizes.push_back(from_cents(c));
  return Instance(votes.voters(), votes.items.size(), from_cents(budget_cents), votes.cells,
                  sizes.empty() ? std::nullopt : std::optional(sizes), votes.items);
}

const std::vector<std::string>& synthetic_profiles() {
  static const std::vector<std::string> names = {
      "disjoint-groups", "independent-bernoulli", "block-correlated", "figure1a", "figure1b",
      "figure1c",        "figure2a",              "figure2b",         "boston-marginal"};
  return names;
}

SyntheticElection gen_synthetic(const SyntheticParams& params) {
  const std::size_t n = params.agents;
  std::size_t k = params.items;
  require(n >= 1 || params.profile == "boston-marginal", ErrorCode::kInvalidArgument,
          "need at least one voter");
  std::mt19937_64 rng(params.seed);
  SyntheticElection e;
  e.family = "linear";
  const std::string& p = params.profile;

  if (p == "disjoint-groups") {
    require(k >= 1 && k <= n, ErrorCode::kInvalidArgument,
            "disjoint groups need between 1 and n items");
    std::vector<double> cells(n * k, 0.0);
    // Contiguous groups, the first n mod k one voter larger.
    std::size_t i = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t size = n / k + (j < n % k ? 1 : 0);
      for (std::size_t c = 0; c < size; ++c, ++i) cells[i * k + j] = 1.0;
    }
    e.votes = matrix(n, default_names(k), std::move(cells));
    unit_costs(e, k);
  } else if (p == "independent-bernoulli") {
    require(k >= 1, ErrorCode::kInvalidArgument, "need at least one item");
    require(params.p > 0.0 && params.p <= 1.0, ErrorCode::kInvalidArgument, "p must lie in (0, 1]");
    random_costs(e, k, rng);
    e.votes = matrix(n, default_names(k),
                     approvals(n, k, rng, [&](std::size_t, std::size_t) { return params.p; }));
    e.family = "saturating";
  } else if (p == "block-correlated") {
    require(k >= 2 && n >= 2, ErrorCode::kInvalidArgument, "blocks need two items and voters");
    require(params.p > 0.0 && params.p <= 1.0, ErrorCode::kInvalidArgument, "p must lie in (0, 1]");
    random_costs(e, k, rng);
    // Two voter blocks, each favouring its own half of the items.
    e.votes = matrix(n, default_names(k), approvals(n, k, rng, [&](std::size_t i, std::size_t j) {
                       const bool same = (2 * i / n) == (2 * j / k);
                       return same ? params.p : params.p / 8.0;
                     }));
    e.family = "saturating";
  } else if (p == "figure1a" || p == "figure1c") {
    require(n >= 2, ErrorCode::kInvalidArgument, "figure profiles need two voters");
    k = 2;
    const std::size_t first = p == "figure1a" ? std::min(n, (n + 1) / 2 + 1) : n - 1;
    std::vector<double> cells(n * 2, 0.0);
    for (std::size_t i = 0; i < n; ++i) cells[i * 2 + (i < first ? 0 : 1)] = 1.0;
    e.votes = matrix(n, default_names(2), std::move(cells));
    unit_costs(e, 2);
  } else if (p == "figure1b") {
    require(n >= 2, ErrorCode::kInvalidArgument, "figure profiles need two voters");
    std::vector<double> cells;
    for (std::size_t i = 0; i < n; ++i) {
      const bool first = i < (n + 1) / 2;
      cells.insert(cells.end(), {first ? 0.6 : 0.0, first ? 0.0 : 0.6, 0.4});
    }
    e.votes = matrix(n, default_names(3), std::move(cells));
    unit_costs(e, 3);
  } else if (p == "figure2a" || p == "figure2b") {
    require(n >= 2, ErrorCode::kInvalidArgument, "figure profiles need two voters");
    std::vector<double> cells = {1.0 / 3.0, 2.0 / 3.0};
    if (p == "figure2b") cells.insert(cells.end(), {2.0 / 3.0, 1.0 / 3.0});
    while (cells.size() < 2 * n) {
      if (p == "figure2a") {
        cells.insert(cells.end(), {1.0, 0.0});
      } else {
        cells.insert(cells.end(), {0.5, 0.5});
      }
    }
    e.votes = matrix(n, default_names(2), std::move(cells));
    unit_costs(e, 2);
  } else if (p == "boston-marginal") {
    // Published totals; each item's supporters are a random subset of the
    // required size, so only the marginals match the original ballots.
    static const std::vector<std::string> names = {
        "Wicked Free Wifi 2.0",
        "Water Bottle Refill Stations at Parks",
        "Hubway Extensions",
        "Bowdoin St. Roadway Resurfacing",
        "Bike Lane Installation",
        "Track at Walker Park",
        "BCYF HP Dance Studio Renovation",
        "BLA Gym Renovations",
        "Ringer Park Renovation",
        "Green Renovation for BCYF Pino"};
    static const std::vector<std::size_t> votes = {2054, 1794, 737, 611, 771,
                                                   672,  759,  1044, 546, 452};
    static const std::vector<std::int64_t> dollars = {119000, 260000, 101600, 100000, 200000,
                                                      240000, 286000, 475000, 280000, 250000};
    const std::size_t voters = 2054;
    k = names.size();
    std::vector<double> cells(voters * k, 0.0);
    std::vector<std::size_t> perm(voters);
    for (std::size_t j = 0; j < k; ++j) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      for (std::size_t c = 0; c < votes[j]; ++c) cells[perm[c] * k + j] = 1.0;
    }
    e.votes = matrix(voters, names, std::move(cells));
    e.budget_cents = 1000000 * 100;
    for (auto d : dollars) e.size_cents.push_back(d * 100);
    e.family = "saturating";
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown synthetic profile '" + p + "'");
  }
  return e;
}

}  // namespace pbcore
