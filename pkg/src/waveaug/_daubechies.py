"""Daubechies db1..db26 reconstruction low-pass filters (minimum phase).

Generated by tools/gen_daubechies.py; do not edit by hand.
"""

REC_LO = {
    1: (
        0.7071067811865476,
        0.7071067811865476,
    ),
    2: (
        0.48296291314453416,
        0.8365163037378079,
        0.2241438680420134,
        -0.12940952255126037,
    ),
    3: (
        0.33267055295008263,
        0.8068915093110925,
        0.45987750211849154,
        -0.13501102001025458,
        -0.08544127388202666,
        0.03522629188570953,
    ),
    4: (
        0.2303778133088965,
        0.7148465705529157,
        0.6308807679298589,
        -0.027983769416859854,
        -0.18703481171909309,
        0.030841381835560764,
        0.0328830116668852,
        -0.010597401785069032,
    ),
    5: (
        0.16010239797419293,
        0.6038292697971896,
        0.7243085284377729,
        0.13842814590132074,
        -0.24229488706638203,
        -0.032244869584638375,
        0.07757149384004572,
        -0.006241490212798274,
        -0.012580751999081999,
        0.0033357252854737712,
    ),
    6: (
        0.11154074335010947,
        0.49462389039845306,
        0.7511339080210954,
        0.31525035170919763,
        -0.22626469396543983,
        -0.12976686756726194,
        0.09750160558732304,
        0.027522865530305727,
        -0.03158203931748603,
        0.0005538422011614961,
        0.004777257510945511,
        -0.0010773010853084796,
    ),
    7: (
        0.07785205408500918,
        0.3965393194819173,
        0.7291320908462351,
        0.4697822874051931,
        -0.14390600392856498,
        -0.22403618499387498,
        0.07130921926683026,
        0.08061260915108308,
        -0.03802993693501441,
        -0.01657454163066688,
        0.01255099855609984,
        0.0004295779729213665,
        -0.0018016407040474908,
        0.00035371379997452024,
    ),
    8: (
        0.05441584224310401,
        0.31287159091429995,
        0.6756307362972898,
        0.5853546836542067,
        -0.015829105256349306,
        -0.2840155429615469,
        0.0004724845739132828,
        0.12874742662047847,
        -0.017369301001807547,
        -0.044088253930794755,
        0.013981027917398282,
        0.008746094047405777,
        -0.004870352993451574,
        -0.00039174037337694705,
        0.0006754494064505693,
        -0.00011747678412476953,
    ),
    9: (
        0.038077947363878345,
        0.24383467461259034,
        0.6048231236901112,
        0.6572880780513005,
        0.13319738582500756,
        -0.2932737832791749,
        -0.09684078322297646,
        0.14854074933810638,
        0.03072568147933338,
        -0.06763282906132997,
        0.00025094711483145197,
        0.022361662123679096,
        -0.004723204757751397,
        -0.00428150368246343,
        0.0018476468830562265,
        0.00023038576352319597,
        -0.0002519631889427101,
        3.93473203162716e-05,
    ),
    10: (
        0.026670057900555554,
        0.1881768000776915,
        0.5272011889317256,
        0.6884590394536035,
        0.2811723436605775,
        -0.24984642432731538,
        -0.19594627437737705,
        0.12736934033579325,
        0.09305736460357235,
        -0.07139414716639708,
        -0.029457536821875813,
        0.033212674059341,
        0.0036065535669561697,
        -0.010733175483330575,
        0.001395351747052901,
        0.001992405295185056,
        -0.0006858566949597116,
        -0.00011646685512928545,
        9.358867032006959e-05,
        -1.3264202894521244e-05,
    ),
    11: (
        0.018694297761471083,
        0.1440670211506245,
        0.44989976435604534,
        0.6856867749162006,
        0.41196436894790744,
        -0.16227524502749036,
        -0.27423084681794696,
        0.0660435881966832,
        0.14981201246637849,
        -0.046479955116684187,
        -0.0664387856950252,
        0.031335090219046076,
        0.020840904360181062,
        -0.0153648209062016,
        -0.0033408588730144454,
        0.004928417656059041,
        -0.0003085928588151432,
        -0.0008930232506662646,
        0.0002491525235528235,
        5.4439074699368475e-05,
        -3.4634984186984996e-05,
        4.49427427723651e-06,
    ),
    12: (
        0.013112257957229518,
        0.10956627282118515,
        0.37735513521421266,
        0.6571987225793071,
        0.5158864784278157,
        -0.04476388565377463,
        -0.3161784537527855,
        -0.023779257256069726,
        0.18247860592757967,
        0.00535956967435215,
        -0.09643212009650708,
        0.010849130255822185,
        0.04154627749508444,
        -0.01221864906974828,
        -0.012840825198300683,
        0.00671149900879551,
        0.0022486072409952378,
        -0.0021795036186277603,
        6.545128212509596e-06,
        0.00038865306282093143,
        -8.850410920820432e-05,
        -2.4241545757030785e-05,
        1.2776952219379767e-05,
        -1.529071758068511e-06,
    ),
    13: (
        0.009202133538962367,
        0.08286124387290278,
        0.31199632216043804,
        0.6110558511587877,
        0.5888895704312189,
        0.08698572617964724,
        -0.31497290771138864,
        -0.12457673075081525,
        0.17947607942933985,
        0.07294893365677717,
        -0.10580761818793433,
        -0.026488406475343694,
        0.05613947710028343,
        0.0023799722540590786,
        -0.02383142071032365,
        0.003923941448797416,
        0.007255589401617566,
        -0.0027619112346568622,
        -0.001315673911892299,
        0.0009323261308672633,
        4.9251525126289464e-05,
        -0.0001651289885565055,
        3.0678537579325496e-05,
        1.0441930571408138e-05,
        -4.700416479360868e-06,
        5.220035098454864e-07,
    ),
    14: (
        0.006461153460087948,
        0.0623647588493989,
        0.2548502677926214,
        0.5543056179408938,
        0.6311878491048568,
        0.21867068775890652,
        -0.27168855227874805,
        -0.21803352999327605,
        0.1383952138648066,
        0.1399890165844607,
        -0.08674841156816969,
        -0.07154895550404614,
        0.05523712625921604,
        0.026981408307912916,
        -0.030185351540390634,
        -0.005615049530356959,
        0.01278949326633341,
        -0.000746218989268385,
        -0.0038496388680221874,
        0.001061691085606762,
        0.0007080211542355279,
        -0.0003868319473129545,
        -4.1777245770372596e-05,
        6.87550425269751e-05,
        -1.0337209184570774e-05,
        -4.389704901781394e-06,
        1.7249946753678127e-06,
        -1.7871399683113592e-07,
    ),
    15: (
        0.004538537361578899,
        0.04674339489276627,
        0.20602386398699574,
        0.4926317717081396,
        0.6458131403574243,
        0.3390025354547315,
        -0.19320413960914543,
        -0.28888259656696563,
        0.06528295284877282,
        0.190146714007123,
        -0.039666176555790945,
        -0.1111209360372317,
        0.033877143923507685,
        0.05478055058450761,
        -0.025767007328439964,
        -0.020810050169693083,
        0.015083918027835902,
        0.005101000360407543,
        -0.006487734560315745,
        -0.00024175649076162427,
        0.0019433239803822114,
        -0.000373482354137617,
        -0.0003595652443624688,
        0.00015589648992059973,
        2.5792699155318936e-05,
        -2.8133296266047814e-05,
        3.36298718173758e-06,
        1.8112704079405772e-06,
        -6.316882325881664e-07,
        6.133359913305752e-08,
    ),
    16: (
        0.003189220925347738,
        0.034907714323673344,
        0.16506428348885313,
        0.4303127228460038,
        0.637356332083789,
        0.4402902568863569,
        -0.08975108940248964,
        -0.3270633105279177,
        -0.027918208133028276,
        0.2111906939471043,
        0.027340263752716042,
        -0.1323883055638104,
        -0.006239722752474872,
        0.07592423604427631,
        -0.007588974368857738,
        -0.03688839769173014,
        0.01029765964095597,
        0.013993768859828731,
        -0.006990014563413916,
        -0.00364427962149839,
        0.003128023381206269,
        0.00040789698084971285,
        -0.0009410217493595676,
        0.00011424152003872239,
        0.00017478724522533817,
        -6.103596621410936e-05,
        -1.3945668988208893e-05,
        1.1336608661276258e-05,
        -1.0435713423116066e-06,
        -7.363656785451205e-07,
        2.3087840868575457e-07,
        -2.109339630100743e-08,
    ),
    17: (
        0.0022418070010373128,
        0.025985393703606044,
        0.1312149033078244,
        0.37035072415264114,
        0.6109966156846228,
        0.5183157640569378,
        0.027314970403293636,
        -0.32832074836396175,
        -0.1265997522158827,
        0.197310589565011,
        0.10113548917747027,
        -0.1268156917782863,
        -0.05709141963167693,
        0.08110598665416088,
        0.022312336178103798,
        -0.04692243838926974,
        -0.0032709555358192938,
        0.02273367658394627,
        -0.003042989981354637,
        -0.008602921520322855,
        0.0029679966915260947,
        0.0023012052421535457,
        -0.0014368453048029762,
        -0.00032813251940983797,
        0.0004394654277686437,
        -2.5610109566548458e-05,
        -8.204803202453391e-05,
        2.3186813798745952e-05,
        6.9906009850767515e-06,
        -4.505942477222988e-06,
        3.0165496099945573e-07,
        2.957700933316857e-07,
        -8.42394844600268e-08,
        7.2674929685616085e-09,
    ),
    18: (
        0.0015763102184407605,
        0.019288531724146376,
        0.10358846582242359,
        0.3146789413370317,
        0.5718268077666072,
        0.5718016548886513,
        0.14722311196992816,
        -0.29365404073655876,
        -0.21648093400514298,
        0.14953397556537779,
        0.1670813127632574,
        -0.09233188415084628,
        -0.10675224665982849,
        0.06488721621190545,
        0.057051247738536884,
        -0.044526141902982326,
        -0.023733210395860002,
        0.02667070592647059,
        0.006262167954305707,
        -0.013051480946612001,
        0.00011863003385811746,
        0.004943343605466738,
        -0.0011187326669924971,
        -0.0013405962983361066,
        0.0006284656829651457,
        0.0002135815619103407,
        -0.00019864855231174796,
        -1.5359171235347246e-07,
        3.7412378807400385e-05,
        -8.520602537446696e-06,
        -3.332634478885822e-06,
        1.7687129836276155e-06,
        -7.691632689885177e-08,
        -1.1760987670282317e-07,
        3.068835863045175e-08,
        -2.5079344549485983e-09,
    ),
    19: (
        0.0011086697631817106,
        0.014281098450764397,
        0.08127811326545956,
        0.26438843174089677,
        0.5244363774646549,
        0.6017045491275379,
        0.26089495265103885,
        -0.22809139421548263,
        -0.28583863175582624,
        0.07465226970810326,
        0.21234974330627848,
        -0.03351854190230288,
        -0.1427856950387366,
        0.027584350625628667,
        0.08690675555581223,
        -0.02650123625012304,
        -0.04567422627723091,
        0.02162376740958505,
        0.019375549889176127,
        -0.013988388678535142,
        -0.005866922281012175,
        0.007040747367105243,
        0.0007689543592575484,
        -0.002687551800701582,
        0.00034180865345859575,
        0.0007358025205054352,
        -0.000260676135678628,
        -0.00012460079173415878,
        8.711270467219923e-05,
        5.105950487073886e-06,
        -1.6640176297154945e-05,
        3.0109643162965265e-06,
        1.531931476691193e-06,
        -6.862755657769143e-07,
        1.4470882987978445e-08,
        4.6369377757826045e-08,
        -1.1164020670358259e-08,
        8.666848838997619e-10,
    ),
    20: (
        0.0007799536136668463,
        0.010549394624950399,
        0.06342378045908152,
        0.21994211355139703,
        0.4726961853109017,
        0.6104932389385939,
        0.36150229873933104,
        -0.13921208801148388,
        -0.32678680043403496,
        -0.016727088309077008,
        0.22829105081991632,
        0.0398502464577712,
        -0.15545875070726795,
        -0.024716827338613585,
        0.10229171917444256,
        0.005632246857307436,
        -0.06172289962468046,
        0.005874681811811827,
        0.03229429953076958,
        -0.00878932492390156,
        -0.01381052613715192,
        0.006721627302259457,
        0.004420542387045791,
        -0.0035814942596096226,
        -0.0008315621728225569,
        0.0013925596193231364,
        -5.349759843997695e-05,
        -0.00038510474869921763,
        0.00010153288973670291,
        6.77428082837773e-05,
        -3.710586183394713e-05,
        -4.376143862183997e-06,
        7.2412482876736205e-06,
        -1.0119940100188862e-06,
        -6.847079597000557e-07,
        2.6339242262700013e-07,
        2.0143220235505126e-10,
        -1.814843248299696e-08,
        4.056127055551833e-09,
        -2.9988364896193194e-10,
    ),
    21: (
        0.0005488225098526838,
        0.007776639052354784,
        0.049247771538177276,
        0.1813596254403815,
        0.4196879449393628,
        0.6015060949350038,
        0.4445904519276003,
        -0.03572291961725529,
        -0.3356640895305295,
        -0.11239707156845098,
        0.2115645276808724,
        0.1152332984396871,
        -0.1399404249325472,
        -0.08177594298086382,
        0.09660039032372422,
        0.04572340574922879,
        -0.06497750489373232,
        -0.018653859202118515,
        0.039726835427850445,
        0.0033577563903381107,
        -0.02089205367797908,
        0.002403470920805435,
        0.008988824381971912,
        -0.0028913343485889014,
        -0.002958374038932831,
        0.001716607040630624,
        0.0006394185005120303,
        -0.0006906711170821016,
        -3.196406277680437e-05,
        0.00019366465041650805,
        -3.635520250086338e-05,
        -3.4996659849874476e-05,
        1.535482509276049e-05,
        2.790330539814487e-06,
        -3.0900171645456993e-06,
        3.1660954423670305e-07,
        2.9921366304648526e-07,
        -1.0004008790305973e-07,
        -2.2540149746733303e-09,
        7.058033541231122e-09,
        -1.4719541976503653e-09,
        1.0388055710237066e-10,
    ),
    22: (
        0.00038626323149109823,
        0.0057218546313345395,
        0.03806993723641108,
        0.14836754089011142,
        0.3677286834460375,
        0.5784327310095244,
        0.5079010906221639,
        0.07372450118363015,
        -0.3127265804282962,
        -0.2005684061048871,
        0.16409318810676649,
        0.1799731879928913,
        -0.09711079840911471,
        -0.1317681376866834,
        0.06807631439273222,
        0.08455737636682607,
        -0.05136425429744413,
        -0.046530811827506714,
        0.03697084662069802,
        0.02058670762756536,
        -0.023480001344493188,
        -0.006213782849364659,
        0.012564725218343373,
        0.0003001373985076436,
        -0.005455691986156717,
        0.0010442607391860253,
        0.0018270104956572791,
        -0.0007706909881231197,
        -0.00042378739983918006,
        0.0003286094142136787,
        4.345899904532003e-05,
        -9.40522363481576e-05,
        1.1374349662125932e-05,
        1.7373756957561893e-05,
        -6.166729316467578e-06,
        -1.5651791319951602e-06,
        1.2951820573188775e-06,
        -8.779879873361287e-08,
        -1.2833362287517545e-07,
        3.7612287493373625e-08,
        1.6801714049229888e-09,
        -2.729623146632976e-09,
        5.33593882166749e-10,
        -3.602113484339555e-11,
    ),
    23: (
        0.00027190419412828886,
        0.004202748893183833,
        0.029310003657884116,
        0.12051553178397194,
        0.3184508138528652,
        0.5449311478735205,
        0.5510185172419194,
        0.18139262536384002,
        -0.2613921480306441,
        -0.27140209860784303,
        0.09212540708241805,
        0.22357365824204023,
        -0.03303744709428938,
        -0.16401132153187592,
        0.0202830745756493,
        0.11229704361810729,
        -0.02112621235622724,
        -0.0702073915749011,
        0.021765856834499976,
        0.038495332522569196,
        -0.01852351365015616,
        -0.017537101003035845,
        0.012751943931528287,
        0.006031840650024163,
        -0.007075319273706152,
        -0.0011348654733562516,
        0.003122876449818145,
        -0.0002465014005163512,
        -0.0010612312288866513,
        0.00031942049270990115,
        0.00025676245200787374,
        -0.0001500218503490341,
        -3.378894834120904e-05,
        4.426071203109246e-05,
        -2.6352078892491864e-06,
        -8.347875567854625e-06,
        2.39756954684024e-06,
        8.147574834779447e-07,
        -5.339005405209421e-07,
        1.853091785633965e-08,
        5.4175491795392784e-08,
        -1.3999354954379989e-08,
        -9.472885901812052e-10,
        1.0504464536965433e-09,
        -1.9324051113134174e-10,
        1.250203302351041e-11,
    ),
    24: (
        0.00019143580094755136,
        0.0030820817149054946,
        0.02248233994971641,
        0.0972622358336252,
        0.2729089160677263,
        0.504371040839925,
        0.574939221095542,
        0.2809855532337119,
        -0.18727140688515623,
        -0.31794307899936275,
        0.004776613684344728,
        0.23923738878031087,
        0.04252872964148383,
        -0.1711753513703469,
        -0.038777173577920016,
        0.12101630346922423,
        0.020980113709144814,
        -0.08216165420800167,
        -0.004578436241819222,
        0.05130162003998088,
        -0.004944709428125628,
        -0.02821310709490189,
        0.007661721881646586,
        0.013049970871085736,
        -0.006291435370018188,
        -0.004746568786323114,
        0.0037360461782825235,
        0.0011537649368394815,
        -0.0016964568189748244,
        -4.41618485614152e-05,
        0.000586127059318311,
        -0.00011812332379695547,
        -0.0001460079817762617,
        6.559388639305635e-05,
        2.1832414604665582e-05,
        -2.0228882926126976e-05,
        1.3411577508091147e-08,
        3.901100338597703e-06,
        -8.980253143938407e-07,
        -4.032507756879972e-07,
        2.1663396532785745e-07,
        -5.0576454197925e-10,
        -2.2557403881760862e-08,
        5.157776789672e-09,
        4.748375824256231e-10,
        -4.0246586445843797e-10,
        6.99180115763823e-11,
        -4.34278250380371e-12,
    ),
    25: (
        0.0001348029793470189,
        0.0022569595918547794,
        0.017186741254040155,
        0.07803586287213267,
        0.23169350788602183,
        0.4596834151460946,
        0.5816368967460578,
        0.3678850748029467,
        -0.09717464096463814,
        -0.3364730796417461,
        -0.08758761458765466,
        0.2245378197451017,
        0.11815528671995985,
        -0.15056021375057962,
        -0.09850861528996022,
        0.10663380501847795,
        0.0667521644940186,
        -0.0770841110565742,
        -0.03717396286112251,
        0.0536179093987795,
        0.015542605929102291,
        -0.03404232046065334,
        -0.0030798367948470366,
        0.018922804476627628,
        -0.0019894257822027366,
        -0.008860702618046369,
        0.0027269362587384956,
        0.003322707773973192,
        -0.0018424842902033313,
        -0.000899977423746295,
        0.0008772581936748275,
        0.00011532124404663005,
        -0.0003098800990984698,
        3.543714523276059e-05,
        7.904640003965528e-05,
        -2.7330481199600417e-05,
        -1.2771952931997837e-05,
        8.990661393062588e-06,
        5.232827708153076e-07,
        -1.7792013326536346e-06,
        3.212037518862519e-07,
        1.9228067901423717e-07,
        -8.656941732278507e-08,
        -2.6115985561117707e-09,
        9.279224480081372e-09,
        -1.8804157550621554e-09,
        -2.228474910228169e-10,
        1.5359015701626572e-10,
        -2.5276251634656447e-11,
        1.5096920828239108e-12,
    ),
    26: (
        9.493795750710593e-05,
        0.0016505202335329882,
        0.0130975542925585,
        0.062274744025149605,
        0.1950394387167701,
        0.4132929622783564,
        0.5736690430342223,
        0.43915831178916626,
        0.0017740767809866858,
        -0.32638459369178,
        -0.1748399612893925,
        0.1812918323111227,
        0.18275540958967237,
        -0.10432390028592704,
        -0.1479771932752545,
        0.06982318611329237,
        0.10648240524980863,
        -0.053448561681483195,
        -0.06865475960403591,
        0.042232185796372036,
        0.03853571597111186,
        -0.03137811036306776,
        -0.017760903568358185,
        0.020734920179963826,
        0.005829580555318888,
        -0.01178549790619303,
        -0.0005287383992626815,
        0.005601947239423805,
        -0.000939058250473829,
        -0.002145530281567621,
        0.0008383488056543616,
        0.0006161382204574344,
        -0.00043195570742618077,
        -0.0001060574748283804,
        0.00015747952386074935,
        -5.277795493037869e-06,
        -4.1096739963914775e-05,
        1.074221540872195e-05,
        7.000078682964987e-06,
        -3.887400161856795e-06,
        -4.6504632206402627e-07,
        7.939210633709952e-07,
        -1.0790042375786714e-07,
        -8.90446637016859e-08,
        3.40779562129073e-08,
        2.169328259850323e-09,
        -3.776010478532324e-09,
        6.780047245828637e-10,
        1.0023031910465269e-10,
        -5.840408185341171e-11,
        9.130510016371797e-12,
        -5.251871224244435e-13,
    ),
}
