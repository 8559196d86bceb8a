#ifndef EVRN_PARAM_VIEW_HPP
#define EVRN_PARAM_VIEW_HPP

#include <cstddef>
#include <string>

namespace evrn {

// Named window into one learnable (or state) array of a model.
struct ParamView {
  std::string name;
  double* data = nullptr;
  size_t size = 0;
};

}  // namespace evrn

#endif  // EVRN_PARAM_VIEW_HPP
