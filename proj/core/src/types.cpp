#include "hedmet/types.hpp"

#include "hedmet/error.hpp"

namespace hedmet {

const std::array<std::string, AttributeVector::count>& AttributeVector::names() {
  static const std::array<std::string, count> k = {
      "organic",         "soy",
      "promotion",       "lfcf",
      "vitmin_label",    "protein_g",
      "carb_g",          "fat_g",
      "cholesterol_dri", "sodium_dri",
      "vitmin_dri",      "servings_per_package"};
  return k;
}

double AttributeVector::get(int i) const {
  switch (i) {
    case 0: return organic;
    case 1: return soy;
    case 2: return promotion;
    case 3: return lfcf;
    case 4: return vitmin_label;
    case 5: return protein_g;
    case 6: return carb_g;
    case 7: return fat_g;
    case 8: return cholesterol_dri;
    case 9: return sodium_dri;
    case 10: return vitmin_dri;
    case 11: return servings_per_package;
    default: fail("attributes: index ", i, " out of range");
  }
}

void AttributeVector::set(int i, double v) {
  switch (i) {
    case 0: organic = v; return;
    case 1: soy = v; return;
    case 2: promotion = v; return;
    case 3: lfcf = v; return;
    case 4: vitmin_label = v; return;
    case 5: protein_g = v; return;
    case 6: carb_g = v; return;
    case 7: fat_g = v; return;
    case 8: cholesterol_dri = v; return;
    case 9: sodium_dri = v; return;
    case 10: vitmin_dri = v; return;
    case 11: servings_per_package = v; return;
    default: fail("attributes: index ", i, " out of range");
  }
}

Eigen::VectorXd AttributeVector::to_vector() const {
  Eigen::VectorXd v(count);
  for (int i = 0; i < count; ++i) v[i] = get(i);
  return v;
}

int type_index(const std::vector<std::string>& types, const std::string& label) {
  for (size_t i = 0; i < types.size(); ++i)
    if (types[i] == label) return static_cast<int>(i);
  return -1;
}

}  // namespace hedmet
