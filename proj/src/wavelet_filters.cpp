#include <array>
#include <span>
#include <string>
#include <vector>

#include "spconf/errors.hpp"
#include "spconf/wavelet.hpp"

namespace spconf {

namespace {

// Daubechies extremal-phase scaling filters, normalized to unit energy
// (sum of coefficients = sqrt(2)). Index k holds the filter with k + 1
// vanishing moments.
const std::array<std::vector<double>, 10> kDaubechies = {{
    {0.70710678118654757, 0.70710678118654757},
    {0.48296291314453416, 0.83651630373780794, 0.22414386804201339, -0.12940952255126037},
    {0.33267055295008263, 0.80689150931109255, 0.45987750211849154, -0.13501102001025458, -0.085441273882026658, 0.035226291885709533},
    {0.23037781330889651, 0.71484657055291567, 0.63088076792985892, -0.027983769416859854, -0.18703481171909309, 0.030841381835560764, 0.032883011666885197, -0.010597401785069032},
    {0.16010239797419293, 0.60382926979718965, 0.72430852843777294, 0.13842814590132074, -0.24229488706638203, -0.032244869584638375, 0.077571493840045719, -0.0062414902127982744, -0.012580751999081999, 0.0033357252854737712},
    {0.11154074335010947, 0.49462389039845306, 0.75113390802109536, 0.31525035170919763, -0.22626469396543983, -0.12976686756726194, 0.097501605587323043, 0.027522865530305727, -0.03158203931748603, 0.00055384220116149613, 0.0047772575109455108, -0.0010773010853084796},
    {0.077852054085009184, 0.39653931948191729, 0.72913209084623509, 0.46978228740519312, -0.14390600392856498, -0.22403618499387498, 0.071309219266830259, 0.080612609151083078, -0.038029936935014413, -0.016574541630666881, 0.01255099855609984, 0.00042957797292136651, -0.0018016407040474908, 0.00035371379997452024},
    {0.054415842243104008, 0.31287159091429995, 0.67563073629728976, 0.58535468365420673, -0.015829105256349306, -0.28401554296154691, 0.00047248457391328279, 0.12874742662047847, -0.017369301001807547, -0.044088253930794755, 0.013981027917398282, 0.0087460940474057766, -0.0048703529934515741, -0.00039174037337694705, 0.00067544940645056933, -0.00011747678412476953},
    {0.038077947363878345, 0.24383467461259034, 0.60482312369011115, 0.65728807805130052, 0.13319738582500756, -0.29327378327917492, -0.096840783222976456, 0.14854074933810638, 0.03072568147933338, -0.067632829061329974, 0.00025094711483145197, 0.022361662123679096, -0.0047232047577513972, -0.0042815036824634303, 0.0018476468830562265, 0.00023038576352319597, -0.00025196318894271012, 3.9347320316271603e-05},
    {0.026670057900555554, 0.1881768000776915, 0.52720118893172563, 0.68845903945360354, 0.28117234366057747, -0.24984642432731538, -0.19594627437737705, 0.12736934033579325, 0.093057364603572348, -0.071394147166397082, -0.029457536821875813, 0.033212674059341002, 0.0036065535669561697, -0.010733175483330575, 0.0013953517470529011, 0.0019924052951850561, -0.00068585669495971162, -0.00011646685512928545, 9.3588670320069592e-05, -1.3264202894521244e-05},
}};

}  // namespace

std::span<const double> daubechies_lowpass(int vanishing_moments) {
  if (vanishing_moments < 1 || vanishing_moments > 10) {
    throw InvalidArgument("wavelet: family must have 1..10 vanishing moments (got " +
                          std::to_string(vanishing_moments) + ")");
  }
  return kDaubechies[vanishing_moments - 1];
}

}  // namespace spconf
