#include "doctest.h"

#include "widur/csi_model.hpp"
#include "widur/rng.hpp"

using namespace widur;

namespace {

std::string manifest_json(double fs = 200.0) {
  return R"({"sampling_rate_hz": )" + format_double(fs) +
         R"(, "carrier_freq_ghz": 2.4, "domain_id": "A", "trace_id": "t0"})";
}

std::string header_row() {
  std::string h = "timestamp_s";
  for (int i = 0; i < 30; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), ",sc%02d", i);
    h += buf;
  }
  return h;
}

std::string row(double ts, double value) {
  std::string r = format_double(ts);
  for (int i = 0; i < 30; ++i) {
    r += ',';
    r += format_double(value);
  }
  return r;
}

CsiTrace random_trace(size_t n, uint64_t seed) {
  Rng rng(seed);
  CsiTrace t;
  t.manifest.domain_id = "A";
  t.manifest.trace_id = "rand";
  for (size_t i = 0; i < n; ++i) {
    CsiFrame f;
    f.timestamp_s = static_cast<double>(i) / 200.0;
    for (auto& a : f.amplitudes) a = std::abs(rng.normal(10.0, 3.0));
    t.frames.push_back(f);
  }
  return t;
}

}  // namespace

TEST_CASE("parse_trace identity on a single row") {
  const std::string csv = header_row() + "\n" + row(0.0, 1.0) + "\n";
  const auto trace = parse_trace(csv, manifest_json());
  REQUIRE(trace.frames.size() == 1);
  for (double a : trace.frames[0].amplitudes) CHECK(a == 1.0);
  CHECK(trace.manifest.sampling_rate_hz == 200.0);
  CHECK(trace.manifest.domain_id == "A");
}

TEST_CASE("exact 1/200 s spacing passes validation") {
  const std::string csv =
      header_row() + "\n" + row(0.0, 1.0) + "\n" + row(0.005, 1.0) + "\n" + row(0.010, 1.0) +
      "\n";
  const auto trace = parse_trace(csv, manifest_json());
  REQUIRE(trace.frames.size() == 3);
  CHECK_NOTHROW(trace.validate());
}

TEST_CASE("non-monotonic timestamps rejected at the offending row") {
  const std::string csv =
      header_row() + "\n" + row(0.0, 1.0) + "\n" + row(0.005, 1.0) + "\n" + row(0.004, 1.0) +
      "\n";
  CHECK_THROWS_WITH_AS(parse_trace(csv, manifest_json()),
                       doctest::Contains("row 4"), NonMonotonicTimestamp);
}

TEST_CASE("malformed header and non-finite values rejected") {
  CHECK_THROWS_AS(parse_trace("timestamp,bogus\n1,2\n", manifest_json()), MalformedHeader);
  const std::string csv = header_row() + "\n" + row(0.0, 1.0) + "\n";
  CHECK_THROWS_AS(parse_trace(csv, "{}"), MalformedHeader);
  std::string bad = header_row() + "\n0.0";
  for (int i = 0; i < 30; ++i) bad += i == 5 ? ",nope" : ",1.0";
  bad += "\n";
  CHECK_THROWS_AS(parse_trace(bad, manifest_json()), NonFiniteValue);
}

TEST_CASE("write_trace emits header plus one line per frame") {
  const auto trace = random_trace(1, 3);
  const auto [csv, manifest] = write_trace(trace);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.substr(0, 11) == "timestamp_s");
}

TEST_CASE("round-trip is identity on random traces") {
  for (uint64_t seed : {1u, 2u, 3u}) {
    const auto trace = random_trace(1000, seed);
    const auto [csv, manifest] = write_trace(trace);
    const auto back = parse_trace(csv, manifest);
    REQUIRE(back.frames.size() == trace.frames.size());
    for (size_t i = 0; i < trace.frames.size(); ++i) {
      CHECK(back.frames[i].timestamp_s == trace.frames[i].timestamp_s);
      for (int sc = 0; sc < kNumSubcarriers; ++sc) {
        CHECK(back.frames[i].amplitudes[sc] == trace.frames[i].amplitudes[sc]);
      }
    }
    CHECK(back.manifest.domain_id == trace.manifest.domain_id);
  }
}

TEST_CASE("validate rejects empty trace and jittered spacing") {
  CsiTrace empty;
  CHECK_THROWS_AS(empty.validate(), EmptyInput);

  auto trace = random_trace(10, 1);
  trace.frames[5].timestamp_s += 0.002;  // 40% over nominal gap
  CHECK_THROWS(trace.validate());
}

TEST_CASE("parse_labels accepts valid intervals") {
  const auto trace = random_trace(1000, 1);
  const auto labels = parse_labels("start_idx,end_idx,label\n0,800,empty\n", trace);
  REQUIRE(labels.size() == 1);
  CHECK(labels[0].start_idx == 0);
  CHECK(labels[0].end_idx == 800);
  CHECK(labels[0].label == Label::Empty);
}

TEST_CASE("parse_labels rejects overlap, out-of-range and unknown labels") {
  const auto trace = random_trace(1000, 1);
  CHECK_THROWS_AS(
      parse_labels("start_idx,end_idx,label\n0,800,dress\n700,900,sit\n", trace),
      OverlappingIntervals);
  CHECK_THROWS_AS(parse_labels("start_idx,end_idx,label\n0,1200,sit\n", trace),
                  IntervalOutOfRange);
  CHECK_THROWS_AS(parse_labels("start_idx,end_idx,label\n0,10,jumping\n", trace),
                  UnknownLabel);
}

TEST_CASE("label vocabulary is exactly the five classes") {
  for (const char* name : {"empty", "sit", "dress", "undress", "other"}) {
    CHECK(label_name(parse_label(name)) == name);
  }
  CHECK_THROWS_AS(parse_label("Dress"), UnknownLabel);
  CHECK_THROWS_AS(parse_label(""), UnknownLabel);
}

TEST_CASE("labels CSV round-trips") {
  const auto trace = random_trace(1000, 2);
  const std::vector<LabeledInterval> intervals = {
      {0, 100, Label::Empty}, {150, 400, Label::Dress}, {500, 900, Label::Undress}};
  const auto csv = write_labels(intervals);
  const auto back = parse_labels(csv, trace);
  REQUIRE(back.size() == intervals.size());
  for (size_t i = 0; i < intervals.size(); ++i) {
    CHECK(back[i].start_idx == intervals[i].start_idx);
    CHECK(back[i].end_idx == intervals[i].end_idx);
    CHECK(back[i].label == intervals[i].label);
  }
}
