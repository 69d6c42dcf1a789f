#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "causalfm/dataset.hpp"
#include "causalfm/error.hpp"
#include "causalfm/jobs.hpp"
#include "causalfm/manifest.hpp"
#include "test_util.hpp"

using namespace causalfm;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Jsonl, RoundTripIsExact) {
  Dataset d(DatasetSchema::make(Setting::front_door, 2, 1, TreatmentType::binary));
  d.schema().provenance = {{"seed", 4}};
  const std::vector<double> m{1.0};
  d.push_row(std::vector<double>{0.1, 1.0 / 3.0}, m, 1.0, -2.75e-17);
  d.push_row(std::vector<double>{-5.0, 1e300}, m, 0.0, 3.0);
  std::stringstream s;
  write_jsonl(d, s);
  const Dataset back = read_jsonl(s);
  EXPECT_EQ(back.n(), 2u);
  EXPECT_EQ(back.d_x(), 2u);
  EXPECT_EQ(back.d_aux(), 1u);
  EXPECT_EQ(back.outcomes(), d.outcomes());
  EXPECT_EQ(back.x(0)[1], 1.0 / 3.0);
  EXPECT_EQ(back.schema().columns, d.schema().columns);
  std::stringstream again;
  write_jsonl(back, again);
  std::stringstream first;
  write_jsonl(d, first);
  EXPECT_EQ(again.str(), first.str());
}

TEST(Jsonl, SchemaErrors) {
  std::stringstream empty;
  EXPECT_THROW(read_jsonl(empty), SchemaError);
  Dataset d(DatasetSchema::make(Setting::back_door, 1, 0, TreatmentType::binary));
  d.push_row(std::vector<double>{0.0}, {}, 1.0, 1.0);
  std::stringstream s;
  write_jsonl(d, s);
  std::string text = s.str() + "[1.0, 2.0]\n";
  std::stringstream bad(text);
  EXPECT_THROW(read_jsonl(bad), SchemaError);
  EXPECT_THROW(load_jsonl("/nonexistent/data.jsonl"), IoError);
}

TEST(Dataset, ValidateRejectsNonBinaryTreatment) {
  Dataset d(DatasetSchema::make(Setting::back_door, 1, 0, TreatmentType::binary));
  d.push_row(std::vector<double>{0.0}, {}, 0.5, 1.0);
  EXPECT_THROW(d.validate(), SchemaError);
}

TEST(Jobs, ParsesLayout) {
  std::stringstream in(
      "age,educ,black,hisp,married,nodegr,re74,re75,treat,employed\n"
      "23,10,1,0,0,1,0,0,1,1\n"
      "30,12,0,1,1,0,1000.5,200,0,0\n");
  const Dataset d = read_jobs_csv(in);
  EXPECT_EQ(d.n(), 2u);
  EXPECT_EQ(d.d_x(), kJobsCovariates);
  EXPECT_EQ(d.x(1)[6], 1000.5);
  EXPECT_EQ(d.a(0), 1.0);
  EXPECT_EQ(d.y(1), 0.0);
}

TEST(Jobs, ErrorsNameTheLine) {
  auto message = [](const std::string& text) {
    std::stringstream in(text);
    try {
      read_jobs_csv(in);
    } catch (const SchemaError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const std::string header = "c1,c2,c3,c4,c5,c6,c7,c8,t,y\n";
  EXPECT_NE(message(header + "1,2,3,4,5,6,7,8,1,1\n1,2,3\n").find("line 3"), std::string::npos);
  EXPECT_NE(message(header + "1,2,3,4,5,6,7,x,1,1\n").find("line 2"), std::string::npos);
  EXPECT_NE(message(header + "1,2,3,4,5,6,7,8,2,1\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("a,b\n"), "");
  EXPECT_NE(message(header), "");
}

TEST(Manifest, Fnv1aKnownAnswers) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(digest_hex(0xabcULL), "0000000000000abc");
}

TEST(Manifest, RoundTripAndTamperDetection) {
  const auto dir = fresh_dir("causalfm_manifest_test");
  write_file_atomic((dir / "out.txt").string(), "hello\n");
  RunManifest m;
  m.command = "gen-data";
  m.config = "a = 1\n";
  m.seed = 9;
  m.add_file(dir.string(), "out.txt", "output");
  m.write(dir.string());
  const RunManifest back = RunManifest::load(dir.string());
  EXPECT_EQ(back.command, "gen-data");
  EXPECT_EQ(back.seed, 9u);
  ASSERT_EQ(back.files.size(), 1u);
  EXPECT_EQ(back.files[0].digest, digest_hex(fnv1a64("hello\n")));
  EXPECT_TRUE(check_manifest(dir.string()).ok);
  std::ofstream(dir / "out.txt") << "tampered\n";
  const ManifestCheck c = check_manifest(dir.string());
  EXPECT_FALSE(c.ok);
  ASSERT_FALSE(c.problems.empty());
  EXPECT_NE(c.problems[0].find("out.txt"), std::string::npos);
  std::filesystem::remove_all(dir);
}
