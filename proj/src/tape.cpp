#include "stereokit/tape.hpp"

namespace stereokit {

template class Tape<float>;
template class Tape<double>;

}  // namespace stereokit
