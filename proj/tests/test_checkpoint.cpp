#include <doctest.h>

#include "sigman/checkpoint.hpp"
#include "sigman/errors.hpp"
#include "support.hpp"

using namespace sigman;
using namespace sigman::test;

TEST_CASE("array table: typed values round trip") {
  Rng rng(0);
  ArrayTable t;
  const auto w = random_tensor<float>(rng, 3, 4);
  t.put("w", w);
  t.put_u64("big", 0xfedcba9876543210ULL);
  t.put_i64("neg", -12345);
  t.put_string("text", "key = value\n");
  const auto back = ArrayTable::deserialize(t.serialize());
  CHECK(back.tensor("w") == w);
  CHECK(back.u64("big") == 0xfedcba9876543210ULL);
  CHECK(back.i64("neg") == -12345);
  CHECK(back.string("text") == "key = value\n");
  CHECK(back.serialize() == t.serialize());
}

TEST_CASE("array table: file round trip is byte-identical") {
  const auto dir = scratch_dir("ckpt");
  Rng rng(1);
  ArrayTable t;
  t.put("a", random_tensor<float>(rng, 2, 2));
  t.write(dir / "x.gemf");
  const auto back = ArrayTable::read(dir / "x.gemf");
  CHECK(back.serialize() == t.serialize());
  CHECK_FALSE(std::filesystem::exists(dir / "x.gemf.tmp"));
}

TEST_CASE("array table: corrupt input is rejected with an offset") {
  ArrayTable t;
  t.put("a", Tensor<float>::Ones(2, 2));
  auto bytes = t.serialize();
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_WITH_AS(ArrayTable::deserialize(truncated), doctest::Contains("truncated"), DataError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_WITH_AS(ArrayTable::deserialize(magic), doctest::Contains("magic"), DataError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(ArrayTable::deserialize(trailing), DataError);
  CHECK_THROWS_AS(t.tensor("missing"), DataError);
  CHECK_THROWS_AS(t.put("a", Tensor<float>::Ones(1, 1)), DataError);
}
