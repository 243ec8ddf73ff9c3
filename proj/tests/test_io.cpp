#include <gtest/gtest.h>

#include <filesystem>

#include "cte/io.hpp"
#include "cte/models.hpp"
#include "cte/simulate.hpp"

using namespace cte;

TEST(RecordCsv, RoundTrip) {
  const GaussianModelParams p;
  SimulationConfig c;
  c.duration = 50;
  const auto rec = simulate_coupled(GaussianTarget{p}, gaussian_source(p), c);
  const auto back = io::record_from_csv(io::record_to_csv(rec));
  EXPECT_EQ(back.start_time(), rec.start_time());
  EXPECT_EQ(back.end_time(), rec.end_time());
  ASSERT_EQ(back.x().size(), rec.x().size());
  ASSERT_EQ(back.y().size(), rec.y().size());
  for (std::size_t i = 0; i < rec.x().size(); ++i) EXPECT_EQ(back.x().events()[i], rec.x().events()[i]);
  for (std::size_t i = 0; i < rec.y().size(); ++i) EXPECT_EQ(back.y().events()[i], rec.y().events()[i]);
}

TEST(RecordCsv, Errors) {
  try {
    io::record_from_csv("time,channel\n1.0,x\n1.0,y\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kBipartite);
  }
  try {
    io::record_from_csv("time,channel\n2.0,x\n1.0,y\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kOrdering);
  }
  EXPECT_THROW(io::record_from_csv("t,c\n1.0,x\n"), Error);
  EXPECT_THROW(io::record_from_csv("time,channel\n1.0,z\n"), Error);
  EXPECT_THROW(io::record_from_csv("time,channel\nabc,x\n"), Error);
}

TEST(RecordCsv, IntervalDefaults) {
  const auto r = io::record_from_csv("time,channel\n1.0,x\n2.0,y\n");
  EXPECT_EQ(r.start_time(), 0.0);
  EXPECT_GT(r.end_time(), 2.0);
  const auto s = io::record_from_csv("# start=0 end=10\ntime,channel\n1.0,x\n", std::nullopt, 20.0);
  EXPECT_EQ(s.end_time(), 20.0);
}

TEST(TrainText, Parse) {
  const auto t = io::train_from_text("# comment\n0.5\n\n1.5\n", 0.0, 2.0);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_THROW(io::train_from_text("1.5\n0.5\n", 0.0, 2.0), Error);
}

TEST(AtomicWrite, ReplacesFile) {
  const auto dir = std::filesystem::temp_directory_path() / "cte_io_test";
  std::filesystem::create_directories(dir);
  const auto f = dir / "out.txt";
  io::atomic_write(f, "one");
  io::atomic_write(f, "two");
  EXPECT_EQ(io::read_file(f), "two");
  EXPECT_FALSE(std::filesystem::exists(dir / "out.txt.tmp"));
  std::filesystem::remove_all(dir);
}

TEST(Format, NineSignificantDigits) {
  EXPECT_EQ(io::fmt(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(io::fmt(-2.920558084), "-2.92055808");
}
