#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "oracles/bit_medium.hpp"
#include "sdlab/nand_medium.hpp"

using namespace sdlab;
using namespace sdlab::nand;
using testutil::bytes;
using testutil::small_geometry;

namespace {

Bytes spare_of(Byte v) { return Bytes(kSpareBytes, v); }

Bytes filled(std::size_t n, Byte v) { return Bytes(n, v); }

}  // namespace

TEST_CASE("geometry validation") {
  CHECK_NOTHROW(MediumGeometry{}.validate());
  CHECK(MediumGeometry{}.block_count == 1571);
  CHECK(MediumGeometry{}.block_bytes() == 128 * 1024);
  for (auto g : {MediumGeometry{0, 64, 10, 10, true}, MediumGeometry{64, 0, 10, 10, true},
                 MediumGeometry{64, 4, 0, 10, true}, MediumGeometry{64, 4, 10, 0, true}})
    CHECK_ERRC(g.validate(), Errc::InvalidGeometry);
}

TEST_CASE("program_chunk uses AND semantics") {
  Medium m(small_geometry());
  const Bytes d = bytes(std::string(64, 'D'));

  SUBCASE("erased cell takes the payload") {
    const auto v = m.program_chunk(1, 0, d, spare_of(0x12));
    CHECK(Bytes(v.payload.begin(), v.payload.end()) == d);
    CHECK(v.program_count == 1);
    CHECK(Bytes(v.spare.begin(), v.spare.end()) == spare_of(0x12));
  }
  SUBCASE("zeros over data give zeros") {
    m.program_chunk(1, 0, d, spare_of(0xFF));
    const auto v = m.program_chunk(1, 0, filled(64, 0x00), spare_of(0x00));
    CHECK(std::all_of(v.payload.begin(), v.payload.end(), [](Byte b) { return b == 0; }));
    CHECK(v.program_count == 2);
  }
  SUBCASE("1010 then 0110 leaves 0010") {
    m.program_chunk(1, 0, filled(64, 0b1010), spare_of(0xFF));
    const auto v = m.program_chunk(1, 0, filled(64, 0b0110), spare_of(0xFF));
    CHECK(v.payload[0] == 0b0010);
    CHECK(v.payload[63] == 0b0010);
  }
  SUBCASE("zero to one is ineffective") {
    m.program_chunk(2, 3, filled(64, 0x00), spare_of(0x00));
    const auto v = m.program_chunk(2, 3, filled(64, 0xFF), spare_of(0xFF));
    CHECK(v.payload[10] == 0x00);
    CHECK(v.spare[0] == 0x00);
  }
  SUBCASE("erase count is untouched") {
    m.program_chunk(1, 0, d, spare_of(0xFF));
    CHECK(m.block_view(1).erase_count == 0);
  }
}

TEST_CASE("program_chunk errors") {
  Medium m(small_geometry());
  const Bytes d = filled(64, 0xAA);
  CHECK_ERRC(m.program_chunk(0, 0, d, spare_of(0xFF)), Errc::IndexOutOfRange);
  CHECK_ERRC(m.program_chunk(9, 0, d, spare_of(0xFF)), Errc::IndexOutOfRange);
  CHECK_ERRC(m.program_chunk(1, 8, d, spare_of(0xFF)), Errc::IndexOutOfRange);
  CHECK_ERRC(m.program_chunk(1, 0, filled(63, 0), spare_of(0xFF)), Errc::SizeMismatch);
  CHECK_ERRC(m.program_chunk(1, 0, d, Bytes(15, 0)), Errc::SizeMismatch);

  Medium single(small_geometry(4, 4, 64, false));
  single.program_chunk(1, 0, d, spare_of(0xFF));
  CHECK_ERRC(single.program_chunk(1, 0, d, spare_of(0xFF)), Errc::MultipleProgrammingForbidden);
  single.erase_block(1);
  CHECK_NOTHROW(single.program_chunk(1, 0, d, spare_of(0xFF)));
}

TEST_CASE("erase_block") {
  Medium m(small_geometry());
  for (ChunkIndex c = 0; c < 8; ++c) m.program_chunk(3, c, filled(64, static_cast<Byte>(c)), spare_of(0x01));

  SUBCASE("mixed data becomes all ones") {
    const auto v = m.erase_block(3);
    CHECK(v.erase_count == 1);
    CHECK_FALSE(v.is_bad);
    for (ChunkIndex c = 0; c < 8; ++c) {
      const auto cell = m.read_chunk(3, c);
      CHECK(std::all_of(cell.payload.begin(), cell.payload.end(), [](Byte b) { return b == kErased; }));
      CHECK(std::all_of(cell.spare.begin(), cell.spare.end(), [](Byte b) { return b == kErased; }));
      CHECK(cell.program_count == 0);
    }
  }
  SUBCASE("erasing twice counts twice") {
    m.erase_block(3);
    const auto v = m.erase_block(3);
    CHECK(v.erase_count == 2);
    CHECK(m.read_chunk(3, 5).payload[0] == kErased);
  }
  SUBCASE("errors") {
    CHECK_ERRC(m.erase_block(0), Errc::IndexOutOfRange);
    CHECK_ERRC(m.erase_block(9), Errc::IndexOutOfRange);
  }
}

TEST_CASE("block turns bad once erase_count exceeds the limit") {
  Medium m(MediumGeometry{32, 2, 2, 3, true});
  for (int i = 0; i < 3; ++i) CHECK_FALSE(m.erase_block(1).is_bad);
  CHECK(m.block_view(1).erase_count == 3);
  const auto v = m.erase_block(1);
  CHECK(v.erase_count == 4);
  CHECK(v.is_bad);
  CHECK(m.is_bad(1));
  CHECK_ERRC(m.erase_block(1), Errc::BadBlock);
  CHECK_ERRC(m.program_chunk(1, 0, filled(32, 0), spare_of(0)), Errc::BadBlock);
  CHECK_NOTHROW(m.read_chunk(1, 0));
  CHECK(m.wear_summary().bad_blocks == 1);
  CHECK_FALSE(m.is_bad(2));
}

TEST_CASE("read_chunk") {
  Medium m(small_geometry());
  CHECK(m.read_chunk(1, 0).payload[0] == kErased);
  m.program_chunk(1, 0, filled(64, 0x5A), spare_of(0xFF));
  CHECK(m.read_chunk(1, 0).payload[7] == 0x5A);
  m.program_chunk(1, 0, filled(64, 0), spare_of(0));
  CHECK(m.read_chunk(1, 0).payload[7] == 0);
  CHECK_ERRC(m.read_chunk(1, 8), Errc::IndexOutOfRange);
  CHECK_ERRC(m.read_chunk(0, 0), Errc::IndexOutOfRange);
}

TEST_CASE("raw_scan") {
  Medium m(small_geometry());
  Bytes payload = filled(64, 0x00);
  const Bytes secret = bytes("PATTERN!");

  SUBCASE("one chunk, one hit, gone after erase") {
    std::copy(secret.begin(), secret.end(), payload.begin() + 20);
    m.program_chunk(4, 6, payload, spare_of(0xFF));
    const auto hits = m.raw_scan(secret);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0] == ScanHit{4, 6, 20});
    m.erase_block(4);
    CHECK(m.raw_scan(secret).empty());
  }
  SUBCASE("three chunks in ascending order, matching a brute-force search") {
    oracle::BitMedium ref(64, 8, 8, 10000, true);
    const std::vector<std::tuple<BlockIndex, ChunkIndex, std::uint32_t>> places = {{7, 1, 0}, {2, 5, 56}, {2, 0, 3}};
    for (auto [b, c, off] : places) {
      Bytes p = filled(64, 0x11);
      std::copy(secret.begin(), secret.end(), p.begin() + off);
      m.program_chunk(b, c, p, spare_of(0xFF));
      ref.program(b, c, p, spare_of(0xFF));
    }
    const auto hits = m.raw_scan(secret);
    const auto expected = ref.scan(secret);
    REQUIRE(hits.size() == 3);
    REQUIRE(expected.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(hits[i].block == std::get<0>(expected[i]));
      CHECK(hits[i].chunk == std::get<1>(expected[i]));
      CHECK(hits[i].offset == std::get<2>(expected[i]));
    }
    CHECK(std::is_sorted(hits.begin(), hits.end()));
  }
  SUBCASE("overlapping occurrences are all reported") {
    m.program_chunk(1, 0, filled(64, 'a'), spare_of(0xFF));
    CHECK(m.raw_scan(std::string_view("aaaa")).size() == 61);
  }
  SUBCASE("matches do not span chunk boundaries") {
    Bytes a = filled(64, 0), b = filled(64, 0);
    std::copy(secret.begin(), secret.begin() + 4, a.end() - 4);
    std::copy(secret.begin() + 4, secret.end(), b.begin());
    m.program_chunk(1, 0, a, spare_of(0xFF));
    m.program_chunk(1, 1, b, spare_of(0xFF));
    CHECK(m.raw_scan(secret).empty());
  }
  SUBCASE("spare bytes are not searched") {
    m.program_chunk(1, 0, filled(64, 0), bytes("PATTERN!PATTERN!"));
    CHECK(m.raw_scan(secret).empty());
  }
  SUBCASE("errors") {
    CHECK_ERRC(m.raw_scan(Bytes{}), Errc::EmptyPattern);
    CHECK_ERRC(m.raw_scan(filled(65, 1)), Errc::PatternTooLong);
    CHECK_NOTHROW(m.raw_scan(filled(64, 1)));
  }
}

TEST_CASE("wear_summary") {
  Medium m(small_geometry());
  auto w = m.wear_summary();
  CHECK(w.erase_counts == std::vector<std::uint64_t>(8, 0));
  CHECK(w.total_erasures == 0);
  CHECK(w.max_erase_count == 0);
  for (int i = 0; i < 5; ++i) m.erase_block(1);
  m.erase_block(6);
  w = m.wear_summary();
  CHECK(w.erase_counts[0] == 5);
  CHECK(w.erase_counts[5] == 1);
  CHECK(w.total_erasures == 6);
  CHECK(w.max_erase_count == 5);
}

TEST_CASE("image round trip is bit exact") {
  Medium m(small_geometry(4, 4, 64));
  std::mt19937_64 rng(7);
  for (BlockIndex b = 1; b <= 4; ++b)
    for (ChunkIndex c = 0; c < 3; ++c) {
      Bytes p(64), s(16);
      for (auto& x : p) x = static_cast<Byte>(rng());
      for (auto& x : s) x = static_cast<Byte>(rng());
      m.program_chunk(b, c, p, s);
    }
  m.erase_block(2);
  m.erase_block(2);

  std::stringstream first;
  m.save(first);
  const std::string image = first.str();
  CHECK(image.size() == 8 + 5 * 8 + 4 * 4 * (64 + 16));
  CHECK(image.substr(0, 8) == "SDLNAND1");

  std::istringstream in(image);
  const Medium loaded = Medium::load(in);
  CHECK(loaded.geometry() == m.geometry());
  std::stringstream second;
  loaded.save(second);
  CHECK(second.str() == image);
  for (BlockIndex b = 1; b <= 4; ++b)
    for (ChunkIndex c = 0; c < 4; ++c) {
      const auto x = m.read_chunk(b, c), y = loaded.read_chunk(b, c);
      CHECK(std::equal(x.payload.begin(), x.payload.end(), y.payload.begin()));
      CHECK(std::equal(x.spare.begin(), x.spare.end(), y.spare.begin()));
    }
}

TEST_CASE("corrupt images are rejected") {
  Medium m(small_geometry(2, 2, 32));
  std::stringstream ss;
  m.save(ss);
  const std::string good = ss.str();
  auto load = [](const std::string& s) {
    std::istringstream in(s);
    return Medium::load(in);
  };
  CHECK_NOTHROW(load(good));

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_ERRC(load(bad_magic), Errc::CorruptImage);
  CHECK_ERRC(load(good.substr(0, good.size() - 1)), Errc::CorruptImage);
  CHECK_ERRC(load(good + "x"), Errc::CorruptImage);
  CHECK_ERRC(load(good.substr(0, 20)), Errc::CorruptImage);
  std::string bad_flags = good;
  bad_flags[8 + 4 * 8] = 0x02;
  CHECK_ERRC(load(bad_flags), Errc::CorruptImage);
  CHECK_ERRC(Medium::load_file("/nonexistent/sdlab.img"), Errc::Io);
}

TEST_CASE("raw_scan agrees with a byte search over the image file") {
  const auto g = small_geometry(6, 4, 48);
  Medium m(g);
  std::mt19937_64 rng(11);
  const Bytes needle = bytes("needle");
  for (int i = 0; i < 30; ++i) {
    const auto b = static_cast<BlockIndex>(1 + rng() % 6);
    const auto c = static_cast<ChunkIndex>(rng() % 4);
    Bytes p(48);
    for (auto& x : p) x = static_cast<Byte>('a' + rng() % 3);
    if (rng() % 2) std::copy(needle.begin(), needle.end(), p.begin() + static_cast<std::ptrdiff_t>(rng() % 43));
    m.program_chunk(b, c, p, Bytes(16, static_cast<Byte>('n')));
  }
  const auto path = std::filesystem::temp_directory_path() / "sdlab_scan_oracle.img";
  m.save_file(path.string());
  std::ifstream in(path, std::ios::binary);
  const std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::filesystem::remove(path);

  std::vector<ScanHit> expected;
  const std::size_t header = 48, cell = 48 + 16;
  for (std::size_t i = 0; i < g.total_chunks(); ++i) {
    const std::string payload = raw.substr(header + i * cell, 48);
    for (std::size_t pos = payload.find("needle"); pos != std::string::npos; pos = payload.find("needle", pos + 1))
      expected.push_back({static_cast<BlockIndex>(i / 4 + 1), static_cast<ChunkIndex>(i % 4),
                          static_cast<std::uint32_t>(pos)});
  }
  CHECK(!expected.empty());
  CHECK(m.raw_scan(needle) == expected);
}

TEST_CASE("bits only fall between erases") {
  Medium m(small_geometry(2, 2, 16));
  std::mt19937_64 rng(3);
  Bytes prev(16, 0xFF);
  for (int i = 0; i < 200; ++i) {
    Bytes p(16);
    for (auto& x : p) x = static_cast<Byte>(rng());
    const auto v = m.program_chunk(1, 1, p, Bytes(16, 0xFF));
    for (std::size_t k = 0; k < 16; ++k) CHECK((v.payload[k] & ~prev[k]) == 0);
    prev.assign(v.payload.begin(), v.payload.end());
  }
}
