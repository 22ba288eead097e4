#include <doctest.h>

#include "gradcheck_common.hpp"

TEST_CASE("all layers and both losses pass central finite-difference checks") {
  for (const auto& res : gradcheck::run_all()) {
    INFO(res.name, " max rel err ", res.max_rel_err);
    CHECK(res.pass);
    CHECK(res.max_rel_err <= 1e-2);
  }
}
