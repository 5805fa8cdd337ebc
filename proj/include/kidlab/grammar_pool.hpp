#pragma once

#include <array>

namespace kidlab {

// Closed identifier pool shared by schema generation, text cell values and
// the vocabulary. The first 8 entries are table names, the rest columns.
inline constexpr std::array<const char*, 8> kTablePool = {
    "items", "orders", "users", "shops", "games", "books", "cars", "pets"};

inline constexpr std::array<const char*, 24> kColumnPool = {
    "id",    "name",  "city",  "year",  "price",  "score", "qty",    "age",
    "rank",  "size",  "weight", "color", "brand",  "owner", "title",  "genre",
    "level", "stock", "speed", "width", "height", "rating", "length", "power"};

// Integer surfaces allowed in rendered SQL: WHERE thresholds are multiples
// of five, LIMIT counts are small.
inline constexpr std::array<int, 20> kWhereIntLiterals = {
    0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80, 85, 90, 95};

inline constexpr std::array<int, 6> kLimitLiterals = {1, 2, 3, 4, 5, 10};

}  // namespace kidlab
