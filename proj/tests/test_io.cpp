// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "dgflow/csv.hpp"
#include "dgflow/errors.hpp"
#include "dgflow/manifest.hpp"
#include "dgflow/parallel.hpp"
#include "dgflow/svg.hpp"
#include "support.hpp"

using namespace dgflow;

TEST_CASE("format_double round trips") {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, 2.76700, 123456789.125}) {
    const auto s = io::format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(io::format_double(0.5) == "0.5");
  const auto m = testing::random_matrix(30, 3, 4);
  const auto path = testing::scratch_dir("io") / "m.csv";
  io::write_csv(path, {"a", "b", "c"}, m);
  const auto t = io::read_csv(path);
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  CHECK(t.rows == m);
  {
    std::ofstream bad(path);
    bad << "a,b\n1,2\n3\n";
  }
  CHECK_THROWS_AS(io::read_csv(path), ConfigError);
  CHECK_THROWS_AS(io::read_csv(path.parent_path() / "missing.csv"), ConfigError);
}

TEST_CASE("parallel_chunks covers every item once and propagates exceptions") {
  for (int threads : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(1001);
    parallel_chunks(1001, 64, threads, [&](std::size_t b, std::size_t e) {
      CHECK(b % 64 == 0);
      for (std::size_t i = b; i < e; ++i) hits[i]++;
    });
    int bad = 0;
    for (auto& h : hits) bad += h.load() != 1;
    CHECK(bad == 0);
    CHECK_THROWS_AS(parallel_chunks(1000, 10, threads,
                                    [](std::size_t b, std::size_t) {
                                      if (b == 500) throw std::runtime_error("chunk 50");
                                    }),
                    std::runtime_error);
  }
  parallel_chunks(0, 8, 4, [](std::size_t, std::size_t) { FAIL("no chunks expected"); });
}

TEST_CASE("manifest hashes and verification") {
  CHECK(manifest::sha256_bytes("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const auto dir = testing::scratch_dir("manifest");
  {
    std::ofstream(dir / "in.txt") << "input";
    std::ofstream(dir / "out.txt") << "output";
  }
  manifest::RunManifest m;
  m.command = "dgflow eval";
  m.config = {{"runs", 10}};
  m.seeds = {{"seed", 1}};
  m.add_input(dir / "in.txt", dir);
  m.add_output(dir / "out.txt", dir);
  CHECK(m.inputs.at(0).path == "in.txt");
  CHECK(m.outputs.at(0).sha256 == manifest::sha256_file(dir / "out.txt"));
  m.save(dir / "manifest.json");
  const auto back = manifest::RunManifest::load(dir / "manifest.json");
  CHECK(back.to_json() == m.to_json());
  auto report = manifest::verify(dir / "manifest.json");
  CHECK(report.ok());
  CHECK(report.checked == 2);

  std::ofstream(dir / "out.txt") << "tampered";
  report = manifest::verify(dir / "manifest.json");
  REQUIRE(report.problems.size() == 1);
  CHECK(report.problems[0].find("out.txt") != std::string::npos);
  std::filesystem::remove(dir / "in.txt");
  CHECK(manifest::verify(dir / "manifest.json").problems.size() == 2);
  CHECK_THROWS_AS(manifest::RunManifest::from_json(manifest::Json::array()), ConfigError);
}

TEST_CASE("svg output is well formed") {
  const auto dir = testing::scratch_dir("svg");
  const auto pts = testing::random_matrix(50, 2, 1);
  svg::write_scatter_panels(dir / "p.svg",
                            {{"base", {{pts, svg::kBaseColor}}}, {"refined", {{pts, svg::kRefinedColor}}}},
                            svg::Bounds{});
  svg::write_vector_field(dir / "f.svg", pts, pts * 0.1, svg::Bounds{});
  for (const char* f : {"p.svg", "f.svg"}) {
    std::ifstream in(dir / f);
    const std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(s.rfind("<svg", 0) == 0);
    CHECK(s.find("</svg>") != std::string::npos);
  }
}
