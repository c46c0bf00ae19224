#pragma once

#include <array>
#include <cstddef>

namespace econcal {

inline constexpr std::size_t kMaxGoods = 2;

/// Money and up to two goods held by one agent. Also used for pooled
/// amounts, macro totals and per-commodity flows; the number of goods in
/// use is a property of the owning economy.
struct Holdings {
  double money = 0.0;
  std::array<double, kMaxGoods> goods{};

  /// Commodity `c`, where 0 is money and 1..kMaxGoods are goods.
  double& operator[](std::size_t c) { return c == 0 ? money : goods[c - 1]; }
  double operator[](std::size_t c) const { return c == 0 ? money : goods[c - 1]; }

  Holdings& operator+=(const Holdings& o) {
    money += o.money;
    for (std::size_t j = 0; j < kMaxGoods; ++j) goods[j] += o.goods[j];
    return *this;
  }
  Holdings& operator-=(const Holdings& o) {
    money -= o.money;
    for (std::size_t j = 0; j < kMaxGoods; ++j) goods[j] -= o.goods[j];
    return *this;
  }
  friend Holdings operator+(Holdings a, const Holdings& b) { return a += b; }
  friend Holdings operator-(Holdings a, const Holdings& b) { return a -= b; }
  friend bool operator==(const Holdings&, const Holdings&) = default;
};

using Totals = Holdings;

inline std::size_t commodity_count(std::size_t goods_count) { return goods_count + 1; }

inline bool non_negative(const Holdings& h) {
  if (!(h.money >= 0.0)) return false;
  for (double g : h.goods)
    if (!(g >= 0.0)) return false;
  return true;
}

}  // namespace econcal
