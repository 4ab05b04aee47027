package station;

import org.springframework.web.bind.annotation.*;

@RestController
@RequestMapping("/api/v1/stations")
public class StationController {
    private final StationService stationService;

    public StationController(StationService stationService) {
        this.stationService = stationService;
    }

    @GetMapping("/{id}")
    public Station getStation(@PathVariable String id) {
        return stationService.find(id);
    }

    public int count() {
        return stationService.count();
    }
}
