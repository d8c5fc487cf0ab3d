#include "qjoint/io.hpp"
#include "qjoint/number_number.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace qjoint;

namespace {

JointGrid<Rational> fock_grid(unsigned n) {
  nn::RetrieveOptions o;
  return nn::nn_retrieve(number_distribution<Rational>(parse_state_spec("fock:" + std::to_string(n))), o).joint;
}

std::vector<std::string> body_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.starts_with("#")) out.push_back(line);
  return out;
}

}  // namespace

TEST(Json, ExactValuesAsFractions) {
  const auto j = io::to_json(fock_grid(1));
  EXPECT_EQ(j["schema"], io::kGridSchema);
  EXPECT_EQ(j["values"][0][0], "-1");
  EXPECT_EQ(j["float_values"][0][1], 1.0);
  EXPECT_EQ(j["errors"][1][1], 0.0);
}

TEST(Json, RaggedCarriesWeight) {
  const Rational nbar(1);
  const auto obs = pn::pn_forward(number_distribution<Rational>(parse_state_spec("vacuum")), pn::ReferenceBeam(nbar));
  const auto j = io::to_json(pn::ragged_observed(obs));
  EXPECT_EQ(j["exp_weight"], "-1");
  EXPECT_EQ(j["rows"][1]["N"], 1);
  EXPECT_EQ(j["rows"][1]["cells"].size(), 2u);
}

TEST(Csv, Header) {
  const std::string csv = io::to_csv(fock_grid(1));
  EXPECT_TRUE(csv.starts_with("row,col,value,float,error\n"));
  EXPECT_NE(csv.find("0,0,-1,"), std::string::npos);
}

TEST(Ascii, FockSevenPattern) {
  const auto lines = body_lines(io::render_ascii(io::render_view(fock_grid(7))));
  ASSERT_EQ(lines.size(), 8u);
  // row label, space, then one character per column
  EXPECT_EQ(lines[2][2 + 2], 'J');
  for (unsigned a = 0; a <= 7; ++a) {
    for (unsigned b = 0; b <= 7; ++b) {
      const char c = lines[a][2 + b];
      if (a + b > 7) {
        EXPECT_EQ(c, '.');
      } else if ((7 - a - b) % 2 == 0) {
        EXPECT_TRUE(c >= '0' && c <= '9') << a << b;
      } else {
        EXPECT_TRUE(c >= 'A' && c <= 'J') << a << b;
      }
    }
  }
}

TEST(Ascii, BucketsScaleWithMax) {
  io::RenderGrid g;
  g.row_labels = {"0"};
  g.col_labels = {"0", "1", "2", "3", "4"};
  g.cells = {{1.0, -1.0, 0.55, 0.0, std::nullopt}};
  const auto lines = body_lines(io::render_ascii(g));
  EXPECT_EQ(lines[0].substr(2), "9J5. ");
}

TEST(Pgm, HeaderAndSize) {
  const auto img = io::render_pgm(io::render_view(fock_grid(2)), 4);
  EXPECT_TRUE(img.magnitude.starts_with("P5\n12 12\n255\n"));
  EXPECT_EQ(img.magnitude.size(), std::string("P5\n12 12\n255\n").size() + 144);
  EXPECT_TRUE(img.sign_mask.starts_with("P5\n"));
  // cell (0,1) = -2 is the darkest and negative
  const std::size_t header = std::string("P5\n12 12\n255\n").size();
  EXPECT_EQ(static_cast<unsigned char>(img.magnitude[header + 4]), 0);
  EXPECT_EQ(static_cast<unsigned char>(img.sign_mask[header + 4]), 255);
  EXPECT_EQ(static_cast<unsigned char>(img.sign_mask[header]), 0);
}

TEST(Files, UnwritableOutput) {
  EXPECT_THROW(io::write_file("/nonexistent-dir/for/sure/out.txt", "x"), UnwritableOutput);
}

TEST(Files, ChessboardPgmWritesSignMask) {
  const auto dir = std::filesystem::temp_directory_path() / "qjoint_io_test";
  std::filesystem::create_directories(dir);
  const auto grid = fock_grid(2);
  const auto paths = io::write_chessboard(io::render_view(grid), io::to_json(grid), io::to_csv(grid),
                                          io::Format::pgm, dir / "board.pgm");
  EXPECT_EQ(paths.size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(dir / "board_sign.pgm"));
  std::filesystem::remove_all(dir);
}

TEST(Format, Parse) {
  EXPECT_EQ(io::parse_format("ascii"), io::Format::ascii);
  EXPECT_EQ(io::to_string(io::Format::json), "json");
  EXPECT_THROW(io::parse_format("png"), ParseError);
}

TEST(RunConfig, RoundTrip) {
  io::RunConfig c;
  c.merge("# comment\nscheme=nn\nstate=pats:k=1,nbar=0.5\nmode=exact\ncutoff=40\ntolerance=1e-10\nseed=7\n");
  EXPECT_EQ(c.scheme, "nn");
  EXPECT_EQ(c.mode, "rational");
  EXPECT_EQ(c.cutoff, 40u);
  EXPECT_EQ(c.seed, 7u);
  const std::string text = c.serialize();
  const auto back = io::RunConfig::parse(text);
  EXPECT_EQ(back.serialize(), text);
  EXPECT_EQ(back.state, c.state);
}

TEST(RunConfig, LaterValuesWin) {
  io::RunConfig c;
  c.merge("shots=10\n");
  c.merge("shots=20\n");
  EXPECT_EQ(c.shots, 20u);
  EXPECT_THROW(c.merge("colour=blue\n"), ParseError);
  EXPECT_THROW(c.merge("state=bogus\n"), ParseError);
}
