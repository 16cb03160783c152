#include "thzcs/acquisition.hpp"
#include "thzcs/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <random>

#include <unistd.h>

using namespace thzcs;

namespace {

CMatrix random_complex(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  CMatrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = cplx(nd(gen), nd(gen));
  return m;
}

std::filesystem::path tmp(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("thzcs_io_" + std::to_string(::getpid()) + "_" + name);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidSpec;
}

}  // namespace

TEST(Cim, ByteLayout) {
  CMatrix m(1, 2);
  m << cplx(1.0, -2.0), cplx(0.5, 0.0);
  const std::string b = encode_matrix(m, FileFormat::Cim);
  ASSERT_EQ(b.size(), 12u + 2 * 16);
  EXPECT_EQ(b.substr(0, 4), "CIM1");
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 1);  // rows LE
  EXPECT_EQ(b[5], 0);
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 2);  // cols LE
  // 1.0 = 0x3FF0000000000000, little-endian
  EXPECT_EQ(static_cast<unsigned char>(b[12 + 7]), 0x3F);
  EXPECT_EQ(static_cast<unsigned char>(b[12 + 6]), 0xF0);
  // -2.0 = 0xC000000000000000
  EXPECT_EQ(static_cast<unsigned char>(b[20 + 7]), 0xC0);
}

TEST(Cim, RoundTripBitExact) {
  const CMatrix m = random_complex(7, 5, 1);
  EXPECT_EQ(decode_matrix(encode_matrix(m, FileFormat::Cim)), m);
  EXPECT_EQ(decode_matrix(encode_matrix(m, FileFormat::Csv)), m);
}

TEST(Cim, RejectsTruncation) {
  std::string b = encode_matrix(random_complex(3, 3, 2), FileFormat::Cim);
  b.pop_back();
  EXPECT_EQ(code_of([&] { decode_matrix(b); }), ErrorCode::Format);
  EXPECT_EQ(code_of([&] { decode_matrix("CIM1\x01"); }), ErrorCode::Format);
}

TEST(Csv, Layout) {
  CMatrix m(2, 1);
  m << cplx(1.5, 0), cplx(0, -0.25);
  EXPECT_EQ(encode_matrix(m, FileFormat::Csv), "2,1\n0,0,1.5,0\n1,0,0,-0.25\n");
}

TEST(Csv, Errors) {
  EXPECT_EQ(code_of([] { decode_matrix("2,2\n0,0,1\n"); }), ErrorCode::Format);
  EXPECT_EQ(code_of([] { decode_matrix("2,2\n5,0,1,0\n"); }), ErrorCode::Format);
  EXPECT_EQ(code_of([] { decode_matrix("2,2\n0,0,1,0\n0,0,1,0\n"); }), ErrorCode::Format);
  EXPECT_EQ(code_of([] { decode_matrix("x,2\n"); }), ErrorCode::Format);
  EXPECT_EQ(code_of([] { decode_matrix(""); }), ErrorCode::Format);
  // missing entries default to zero, CRLF accepted
  const CMatrix m = decode_matrix("2,2\r\n1,1,3,4\r\n");
  EXPECT_EQ(m(1, 1), cplx(3, 4));
  EXPECT_EQ(m(0, 0), cplx(0, 0));
}

TEST(Sensing, KindTagRoundTrip) {
  const auto g = gen_gaussian_complex(4, 9, 3);
  const std::string gb = encode_sensing(g, FileFormat::Cim);
  EXPECT_EQ(gb.size(), 12u + 1 + 36 * 16);
  EXPECT_EQ(gb[12], 0);
  EXPECT_TRUE(is_cim_sensing(gb));
  EXPECT_FALSE(is_cim_sensing(encode_matrix(g.matrix(), FileFormat::Cim)));
  const auto g2 = decode_sensing(gb);
  EXPECT_EQ(g2.kind(), SensingKind::ComplexGaussian);
  EXPECT_EQ(g2.matrix(), g.matrix());

  const auto b = gen_bernoulli_k(6, 10, 3, 4);
  const std::string bb = encode_sensing(b, FileFormat::Cim);
  EXPECT_EQ(bb[12], 1);
  EXPECT_EQ(static_cast<unsigned char>(bb[13]), 3);
  const auto b2 = decode_sensing(bb);
  EXPECT_EQ(b2.kind(), SensingKind::BernoulliK);
  EXPECT_EQ(b2.k(), 3);
  EXPECT_EQ(b2.matrix(), b.matrix());

  const auto b3 = decode_sensing(encode_sensing(b, FileFormat::Csv));
  EXPECT_EQ(b3.kind(), SensingKind::BernoulliK);
  EXPECT_EQ(b3.k(), 3);
  EXPECT_EQ(decode_sensing(encode_sensing(g, FileFormat::Csv)).kind(), SensingKind::ComplexGaussian);

  std::string bad = gb;
  bad[12] = 7;
  EXPECT_EQ(code_of([&] { decode_sensing(bad); }), ErrorCode::Format);
}

TEST(Files, WriteReadAndMissing) {
  const auto p = tmp("img.cim");
  const ComplexImage img(random_complex(4, 6, 5));
  write_image(p, img, FileFormat::Cim);
  EXPECT_EQ(read_image(p).matrix(), img.matrix());
  const auto q = tmp("img.csv");
  write_image(q, img, FileFormat::Csv);
  EXPECT_EQ(read_image(q).matrix(), img.matrix());
  const auto s = tmp("phi.cim");
  write_sensing(s, gen_bernoulli_k(3, 5, 2, 1), FileFormat::Cim);
  EXPECT_EQ(read_sensing(s).k(), 2);
  std::filesystem::remove(p);
  std::filesystem::remove(q);
  std::filesystem::remove(s);
  EXPECT_EQ(code_of([&] { read_image(tmp("does_not_exist")); }), ErrorCode::Io);
  EXPECT_EQ(code_of([&] { write_image("/nonexistent_dir/x.cim", img, FileFormat::Cim); }), ErrorCode::Io);
}
