"""Reference values frozen from independent oracles.

* CITY_PAIRS: great-circle distance (km, R = 6371) from the spherical law of
  cosines evaluated with mpmath at 50 significant digits.
* IBETA_3_5_03: I_0.3(3, 5) from the finite binomial series (exact for
  integer shapes), mpmath.
* CE_123_TARGET2: -log softmax([1, 2, 3])[2], mpmath.
* T_CASES / ANOVA_CASES: scipy.stats.ttest_ind(equal_var=True) and
  scipy.stats.f_oneway on fixed samples.
"""

CITY_PAIRS = [
    ((40.7128, -74.006), (34.0522, -118.2437), 3935.7462546097229),  # new_york - los_angeles
    ((51.5074, -0.1278), (48.8566, 2.3522), 343.55606034104199),  # london - paris
    ((35.6762, 139.6503), (-33.8688, 151.2093), 7825.8186165161566),  # tokyo - sydney
    ((-23.5505, -46.6333), (30.0444, 31.2357), 10219.652615792751),  # sao_paulo - cairo
    ((55.7558, 37.6173), (19.076, 72.8777), 5027.9615618595681),  # moscow - mumbai
    ((-33.9249, 18.4241), (64.1466, -21.9426), 11463.579697096034),  # cape_town - reykjavik
    ((61.2181, -149.9003), (1.3521, 103.8198), 10737.045675653457),  # anchorage - singapore
    ((-34.6037, -58.3816), (21.3069, -157.8583), 12167.759054523282),  # buenos_aires - honolulu
    ((-0.1807, -78.4678), (-36.8485, 174.7633), 11479.445764626285),  # quito - auckland
    ((40.7128, -74.006), (40.6782, -73.9442), 6.4766935329126153),  # new_york - brooklyn
    ((40.7128, -74.006), (40.7178, -74.0431), 3.1758807445989128),  # new_york - jersey_city
    ((51.5074, -0.1278), (35.6762, 139.6503), 9558.5613708066377),  # london - tokyo
    ((-33.8688, 151.2093), (-36.8485, 174.7633), 2155.8983259777427),  # sydney - auckland
    ((48.8566, 2.3522), (-33.9249, 18.4241), 9341.7388240395241),  # paris - cape_town
    ((21.3069, -157.8583), (61.2181, -149.9003), 4480.6468363147449),  # honolulu - anchorage
    ((1.3521, 103.8198), (19.076, 72.8777), 3903.7771322778084),  # singapore - mumbai
    ((64.1466, -21.9426), (55.7558, 37.6173), 3307.6288296092884),  # reykjavik - moscow
    ((30.0444, 31.2357), (-0.1807, -78.4678), 11904.906870374685),  # cairo - quito
    ((34.0522, -118.2437), (35.6762, 139.6503), 8819.3931940902357),  # los_angeles - tokyo
    ((-34.6037, -58.3816), (-23.5505, -46.6333), 1674.8699328412671),  # buenos_aires - sao_paulo
]
IBETA_3_5_03 = 0.3529305
CE_123_TARGET2 = 0.40760596444438030448
T_CASES = [
    ([2.1, 2.5, 2.3, 2.7], [1.1, 1.5, 1.3], 6.086116686897368, 0.0017319158095083905),
    ([-0.974, 0.495, 0.425, -0.441, -0.1, -1.804, -0.882, 0.217, 0.596, -0.009, -0.823], [-2.505, 1.805, -0.598, -1.564, -1.957], 1.1096074612992641, 0.2858647460882887),
    ([0.763, -1.355, -0.843, 0.102, -1.213, -1.155, 1.688, -0.145, -0.374, 2.149, 0.997], [0.652, -0.183, -4.905, 0.81, -0.7, 2.477, 1.475, 2.164, -1.203, 0.438], -0.06295352189023333, 0.9504610880014088),
    ([-0.997, -0.135, -0.541], [-0.111, 2.053, 1.474, 2.042, 1.734, -1.881, 0.849, -0.757, 3.391], -1.5633010275652273, 0.1490469224879082),
    ([1.117, 0.667, 0.124], [1.415, 2.022, 2.879, 1.498, 3.257, 0.587, 1.315], -2.07945499550537, 0.07117545595187001),
    ([-0.692, -1.698, -1.894, 1.371, -1.605, -0.858, -1.299, 0.004, -1.434], [0.863, 0.233, 2.042, 2.268, 1.123, -0.153, 1.448, 1.187, 3.227], -4.61638066047237, 0.00028595967158407944),
    ([0.868, -0.089, 2.301, -0.01, 1.796, 2.457, -0.817, -1.214], [-0.779, -2.22, 0.122, -0.242, -1.767, -0.968, 1.734, -0.491, -0.261], 1.944637287208137, 0.07081440322831302),
    ([-1.571, 0.92, 1.254], [-0.29, 0.461, 0.047, 0.215, -1.426, -0.722, 0.529, -0.409], 0.6354744881964279, 0.5409377886182754),
    ([-0.831, -0.302, 0.713], [4.037, 0.925, 1.622, 0.269, -0.394, 4.599, -1.84, -0.918, 2.293, -1.502], -0.7804270693485595, 0.451606979402996),
    ([-0.593, -2.171, 1.214, 1.383, -0.932, -0.292, -0.528], [-0.169, 0.272, -0.369, -1.004, 0.009, 0.098, -0.872], 0.03301239483054215, 0.9742074531141001),
]
ANOVA_CASES = [
    ([[4.2, 4.8, 5.1, 4.9], [5.9, 6.1, 5.5], [4.0, 3.6, 4.4, 4.1, 3.9]], 29.084897610921534, 0.00011797994332434525),
    ([[-0.439, 2.628, 1.495, -1.356, 0.051], [0.264, 0.303, -0.437, 0.142, -0.86], [0.511, -0.128, 3.524]], 1.0141532509531872, 0.3971710356194438),
    ([[0.943, 1.08, 0.832, 0.596], [0.63, 0.555], [1.18, 1.645, -0.726, 1.867], [0.06, 1.44]], 0.11790458411221222, 0.9470496468826043),
    ([[0.998, -1.516, -2.598, -0.406, 0.53, -1.081, -0.783, -0.749], [0.806, 1.014, -0.899, -1.341, 0.026, 0.812, 1.082, 0.536]], 3.4542735429322664, 0.08423827471715789),
    ([[-1.381, -1.229, -1.05], [-0.115, 0.425, 2.405, -1.184, -0.153], [-0.111, 0.873, 0.735, 0.999, -0.4, -2.111, 1.797, 1.24]], 2.194243951316587, 0.15098366942386193),
    ([[0.759, 0.241, 0.849, -0.022, -1.615, -0.566, 0.371, -0.519], [-0.752, 1.375, -0.099, 1.254], [1.858, -0.474, -0.269, 1.297]], 0.780009888403327, 0.4787171852376065),
    ([[2.38, -2.323, -0.009], [1.216, -0.116, -1.6, -0.561, 0.254, 0.225], [-1.402, -0.564]], 0.35906965923375905, 0.7090301914228413),
    ([[-0.619, 0.176, -1.094, 0.268, 0.809, -0.843, -1.902], [-0.35, 1.034, 0.032, 0.149], [0.244, -1.817, -0.243, 1.394, 0.273]], 0.7089835634236566, 0.5102177797372479),
    ([[-1.715, -0.357, -0.149, -1.311, -0.834, 1.156], [0.244, -0.258, 1.735, -0.936, 0.682], [-0.372, 1.35, -1.886, -0.029, 0.695, -1.228, 0.715]], 0.8251518198700356, 0.45710740750359524),
    ([[-1.409, -1.546, 1.208, 0.662, -0.946], [-1.294, -0.74, -0.653]], 0.4093249476745103, 0.5459502799163509),
]
