#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "atlas/core.hpp"
#include "atlas/csv.hpp"

namespace atlas {

// One call-detail record. Line format, fixed field order:
//   caller_id,callee_id,tower_id,start_epoch_s,end_epoch_s
struct CallRecord {
  std::string caller_id;
  std::string callee_id;
  std::string tower_id;
  std::int64_t start_time = 0;
  std::int64_t end_time = 0;

  friend bool operator==(const CallRecord&, const CallRecord&) = default;
};

struct ParseIssue {
  std::size_t line_no = 0;
  std::string reason;
};

struct ParseResult {
  std::vector<CallRecord> records;
  std::vector<ParseIssue> issues;
};

/// Canonical serialization; parse_cdr(to_line(r)) reproduces r exactly.
inline std::string to_line(const CallRecord& r) {
  std::string out;
  out.reserve(r.caller_id.size() + r.callee_id.size() + r.tower_id.size() + 32);
  out += r.caller_id;
  out += ',';
  out += r.callee_id;
  out += ',';
  out += r.tower_id;
  out += ',';
  csv::append(out, r.start_time);
  out += ',';
  csv::append(out, r.end_time);
  return out;
}

// Zero-copy view of one parsed record; fields alias the input buffer.
struct CdrView {
  std::string_view caller_id;
  std::string_view callee_id;
  std::string_view tower_id;
  std::int64_t start_time = 0;
  std::int64_t end_time = 0;
};

namespace detail {

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const {
    return std::hash<std::string_view>{}(s);
  }
};

struct StringEq {
  using is_transparent = void;
  bool operator()(std::string_view a, std::string_view b) const { return a == b; }
};

// Validates one CDR line. Returns the issue reason, or nullopt on success.
inline std::optional<std::string> parse_cdr_line(std::string_view line,
                                                 CdrView& out,
                                                 std::vector<std::string_view>& fields) {
  csv::split(line, ',', fields);
  if (fields.size() != 5)
    return "expected 5 fields, got " + std::to_string(fields.size());
  if (fields[0].empty()) return std::string("empty caller_id");
  if (fields[1].empty()) return std::string("empty callee_id");
  if (fields[2].empty()) return std::string("empty tower_id");
  if (!csv::parse_i64(fields[3], out.start_time))
    return "invalid start_time '" + std::string(fields[3]) + "'";
  if (!csv::parse_i64(fields[4], out.end_time))
    return "invalid end_time '" + std::string(fields[4]) + "'";
  if (out.end_time < out.start_time) return std::string("end_time before start_time");
  if (fields[0] == fields[1]) return std::string("self-loop rejected");
  out.caller_id = fields[0];
  out.callee_id = fields[1];
  out.tower_id = fields[2];
  return std::nullopt;
}

// A five-field first line whose timestamp columns are not numeric is an
// optional header.
inline bool looks_like_header(std::string_view line) {
  std::vector<std::string_view> fields;
  csv::split(line, ',', fields);
  if (fields.size() != 5) return false;
  std::int64_t v;
  return !csv::parse_i64(fields[3], v) || !csv::parse_i64(fields[4], v);
}

}  // namespace detail

// Streaming scan over a CDR text buffer. Empty lines are skipped; a header
// on line 1 is skipped; every other line becomes exactly one record or one
// issue. In strict mode the first issue throws. The record callback receives
// (line_no, CdrView) with views into `text`.
template <typename OnRecord, typename OnIssue>
void scan_cdr(std::string_view text, bool strict, OnRecord&& on_record,
              OnIssue&& on_issue) {
  std::vector<std::string_view> fields;
  csv::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    if (line_no == 1 && detail::looks_like_header(line)) return;
    CdrView view;
    if (auto reason = detail::parse_cdr_line(line, view, fields)) {
      if (strict)
        fail("cdr parse: line " + std::to_string(line_no) + ": " + *reason);
      on_issue(ParseIssue{line_no, std::move(*reason)});
    } else {
      on_record(line_no, view);
    }
  });
}

/// Total over arbitrary input: every nonempty line lands in `records` or
/// `issues` (in strict mode the first issue throws instead).
inline ParseResult parse_cdr(std::string_view text, bool strict = false) {
  ParseResult result;
  scan_cdr(
      text, strict,
      [&](std::size_t, const CdrView& v) {
        result.records.push_back(CallRecord{std::string(v.caller_id),
                                            std::string(v.callee_id),
                                            std::string(v.tower_id),
                                            v.start_time, v.end_time});
      },
      [&](ParseIssue issue) { result.issues.push_back(std::move(issue)); });
  return result;
}

inline ParseResult parse_cdr(std::istream& in, bool strict = false) {
  std::string text(std::istreambuf_iterator<char>(in), {});
  if (in.bad()) fail("cdr parse: unreadable source");
  return parse_cdr(text, strict);
}

// One cell tower. poi_category is optional; empty means absent.
struct Tower {
  std::string tower_id;
  double latitude = 0.0;
  double longitude = 0.0;
  std::string poi_category;

  bool has_poi() const { return !poi_category.empty(); }

  friend bool operator==(const Tower&, const Tower&) = default;
};

// Tower set keyed by id; insertion order preserved for iteration.
class TowerTable {
 public:
  void add(Tower t) {
    if (t.tower_id.empty()) fail("tower table: empty tower_id");
    if (t.latitude < -90.0 || t.latitude > 90.0)
      fail("tower " + t.tower_id + ": latitude " + csv::format(t.latitude) +
           " out of range [-90, 90]");
    if (t.longitude < -180.0 || t.longitude > 180.0)
      fail("tower " + t.tower_id + ": longitude " + csv::format(t.longitude) +
           " out of range [-180, 180]");
    auto [it, inserted] = index_.emplace(t.tower_id, towers_.size());
    if (!inserted) fail("tower table: duplicate tower_id " + t.tower_id);
    towers_.push_back(std::move(t));
  }

  const Tower* find(std::string_view id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &towers_[it->second];
  }

  const Tower& at(std::string_view id) const {
    const Tower* t = find(id);
    if (!t) fail("tower " + std::string(id) + " not in tower table");
    return *t;
  }

  bool contains(std::string_view id) const { return find(id) != nullptr; }
  std::size_t size() const { return towers_.size(); }
  bool empty() const { return towers_.empty(); }
  auto begin() const { return towers_.begin(); }
  auto end() const { return towers_.end(); }

  friend bool operator==(const TowerTable& a, const TowerTable& b) {
    return a.towers_ == b.towers_;
  }

 private:
  std::vector<Tower> towers_;
  std::unordered_map<std::string, std::size_t, detail::StringHash, detail::StringEq>
      index_;
};

/// Loads `tower_id,lat,lon[,poi_category]` rows. Any malformed line,
/// duplicate id, or out-of-range coordinate throws.
inline TowerTable load_towers(std::string_view text) {
  TowerTable table;
  std::vector<std::string_view> fields;
  csv::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    csv::split(line, ',', fields);
    if (line_no == 1 && fields.size() >= 3) {
      double v;
      if (!csv::parse_double(fields[1], v)) return;  // header
    }
    if (fields.size() != 3 && fields.size() != 4)
      fail("tower file: line " + std::to_string(line_no) + ": expected 3 or 4 fields, got " +
           std::to_string(fields.size()));
    Tower t;
    t.tower_id = std::string(fields[0]);
    if (!csv::parse_double(fields[1], t.latitude))
      fail("tower file: line " + std::to_string(line_no) + ": invalid latitude");
    if (!csv::parse_double(fields[2], t.longitude))
      fail("tower file: line " + std::to_string(line_no) + ": invalid longitude");
    if (fields.size() == 4) t.poi_category = std::string(fields[3]);
    try {
      table.add(std::move(t));
    } catch (const Error& e) {
      fail("tower file: line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return table;
}

inline TowerTable load_towers(std::istream& in) {
  std::string text(std::istreambuf_iterator<char>(in), {});
  if (in.bad()) fail("tower file: unreadable source");
  return load_towers(text);
}

inline void write_towers_csv(std::ostream& os, const TowerTable& towers) {
  for (const Tower& t : towers) {
    os << t.tower_id << ',' << csv::format(t.latitude) << ','
       << csv::format(t.longitude);
    if (t.has_poi()) os << ',' << t.poi_category;
    os << '\n';
  }
}

}  // namespace atlas
