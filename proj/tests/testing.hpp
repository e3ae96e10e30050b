#ifndef PWACERT_TESTS_TESTING_HPP
#define PWACERT_TESTS_TESTING_HPP

#include <string>

#include "pwacert/model.hpp"

inline std::string model_path(const std::string& name) { return std::string(PWACERT_MODELS_DIR) + "/" + name + ".json"; }

inline pwacert::model::PwaSystem load(const std::string& name) { return pwacert::model::load_model(model_path(name)); }

#endif
