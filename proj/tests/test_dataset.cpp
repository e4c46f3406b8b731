#include <doctest.h>

#include "relucode/dataset.hpp"
#include "relucode/errors.hpp"
#include "relucode/files.hpp"
#include "test_support.hpp"

using namespace relucode;

TEST_CASE("CSV datasets") {
  const auto d = parse_dataset_csv("x1,x2,label\n1,2,0\n-0.5, 3e2 ,1\r\n\n");
  CHECK(d.size() == 2);
  CHECK(d.dim() == 2);
  CHECK(d.points(1, 1) == 300.0);
  CHECK(d.labels == std::vector<int>{0, 1});

  const auto unlabeled = parse_dataset_csv("x1,x2,x3\n1,2,3\n");
  CHECK_FALSE(unlabeled.labeled());
  CHECK(unlabeled.dim() == 3);

  CHECK(parse_dataset_csv(to_dataset_csv(d)).points == d.points);
  CHECK(parse_dataset_csv(to_dataset_csv(d)).labels == d.labels);
}

TEST_CASE("CSV errors carry line numbers") {
  CHECK_THROWS_AS(parse_dataset_csv(""), ValidationError);
  CHECK_THROWS_AS(parse_dataset_csv("x1,x2\n"), ValidationError);
  CHECK_THROWS_AS(parse_dataset_csv("a,b\n1,2\n"), ParseError);
  CHECK_THROWS_AS(parse_dataset_csv("label\n1\n"), ParseError);
  try {
    parse_dataset_csv("x1,x2\n1,2\n3\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.location() == 3);
  }
  try {
    parse_dataset_csv("x1,x2\n1,2\n3,4\n5,z\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.location() == 4);
    CHECK(std::string(e.what()).find("column 2") != std::string::npos);
  }
}

TEST_CASE("RCD-F32 datasets") {
  Dataset d;
  d.points.resize(3, 2);
  d.points << 1.5, -2, 0.25, 8, 1e-3, 7;
  const auto bytes = to_dataset_f32(d);
  CHECK(bytes.size() == 4 + 4 + 4 + 6 * 4);
  const auto back = parse_dataset_f32(bytes);
  CHECK(back.points.rows() == 3);
  CHECK(back.points(0, 0) == 1.5);
  CHECK(back.points(2, 0) == static_cast<double>(1e-3f));
  CHECK_THROWS_AS(parse_dataset_f32(bytes.substr(0, bytes.size() - 1)), ParseError);
  CHECK_THROWS_AS(parse_dataset_f32(std::string("RCDF") + std::string(8, '\0')), ValidationError);
}

TEST_CASE("loading with a label file") {
  const auto dir = relucode::testing::scratch_dir("dataset_load");
  Dataset d;
  d.points.resize(2, 2);
  d.points << 1, 2, 3, 4;
  write_file(dir / "p.rcd", to_dataset_f32(d));
  write_file(dir / "l.txt", "label\n1\n0\n");
  const auto loaded = load_dataset(dir / "p.rcd", dir / "l.txt");
  CHECK(loaded.points == d.points);
  CHECK(loaded.labels == std::vector<int>{1, 0});

  write_file(dir / "short.txt", "1\n");
  CHECK_THROWS_AS(load_dataset(dir / "p.rcd", dir / "short.txt"), ValidationError);
  write_file(dir / "bad.csv", "x1\n1\nfoo\n");
  try {
    load_dataset(dir / "bad.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("bad.csv") != std::string::npos);
  }
  CHECK_THROWS_AS(load_dataset(dir / "missing.csv"), FileError);
  CHECK(parse_labels("3\n\n-1\n") == std::vector<int>{3, -1});
}
